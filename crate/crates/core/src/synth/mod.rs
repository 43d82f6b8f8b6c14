//! Seeded market simulator with planted pricing behaviours.
//!
//! Every random draw comes from a stream keyed by (seed, purpose, store,
//! item), so adding a store or an item leaves the draws of all others
//! untouched, and results do not depend on thread scheduling.

mod calendar;
mod config;
mod sim;
mod truth;

pub use calendar::{make_bestseller_calendar, BestsellerCalendar, LIST_NAMES};
pub use config::{
    BestsellerParams, ItemCounts, LagDistribution, MagnitudePct, PriceRange, SimConfig,
    StoreBehavior, StoreSpec,
};
pub use sim::{confound_scenario, simulate, SimOutput};
pub use truth::{GroundTruth, GroundTruthRecord};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
}

impl SimError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        SimError::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Independent RNG stream for one purpose and key.
pub(crate) fn stream(seed: u64, purpose: &str, key: &[&str]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(purpose.as_bytes());
    for part in key {
        h.update([0u8]);
        h.update(part.as_bytes());
    }
    let bytes: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(bytes)
}
