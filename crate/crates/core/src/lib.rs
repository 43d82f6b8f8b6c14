//! Detection of leader-follower pricing in retail price panels.
//!
//! The pipeline runs bottom-up:
//!
//! - [`panel`]: ingest daily price observations, extract price changes, and
//!   split them by item category.
//! - [`clusters`]: pool each item's changes across stores into n-day clusters
//!   and summarise them.
//! - [`leadership`]: credit cluster initiators, compute leader ratios, and
//!   build focal-store lag tables.
//! - [`synth`]: seeded market simulator with planted behaviours for
//!   injection/recovery checks.
//! - [`report`]: deterministic CSV and Markdown tables.

pub mod clusters;
pub mod panel;
pub mod leadership;
pub mod synth;
pub mod report;
