//! Analysis bundle and deterministic table rendering.

mod render;

pub use render::{parse_lag_csv, render, Format, RenderError, Rendered};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clusters::{
    cluster_changelog, cluster_summary, store_count_histogram, ClusterStats, StoreCountHistogram,
    Window,
};
use crate::leadership::{classify_initiators, lag_distribution, CarriedItems, InitiatorStats, LagError, LagTable};
use crate::panel::{
    extract_changes, per_store_change_counts, stratify, CategoryError, CategoryLabel, CategorySet,
    ChangeCountTable, ChangeLog, PricePanel, StoreId,
};

/// A report section that is either computed or explicitly missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section<T> {
    Present(T),
    Absent(String),
}

impl<T> Section<T> {
    pub fn present(&self) -> Option<&T> {
        match self {
            Section::Present(v) => Some(v),
            Section::Absent(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub toolkit_version: String,
    pub panel_digest: String,
    pub date_range: Option<(NaiveDate, NaiveDate)>,
    pub focal_store: Option<StoreId>,
    pub lag_radius: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub window: Window,
    pub stats: ClusterStats,
}

/// One store-count histogram; `category: None` pools all categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramEntry {
    pub category: Option<CategoryLabel>,
    pub window: Window,
    pub histogram: StoreCountHistogram,
}

/// The focal store's lag table for one category (`None` pools all).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryLag {
    pub category: Option<CategoryLabel>,
    pub table: Section<LagTable>,
}

/// Everything the five tables are rendered from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: Metadata,
    pub windows: Vec<Window>,
    pub stores: Vec<StoreId>,
    pub change_counts: Section<ChangeCountTable>,
    pub cluster_stats: Section<Vec<WindowStats>>,
    pub histograms: Section<Vec<HistogramEntry>>,
    pub initiators: Section<Vec<InitiatorStats>>,
    pub lag_tables: Section<Vec<CategoryLag>>,
}

impl ReportBundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone)]
pub struct BundleOptions {
    pub windows: Vec<Window>,
    pub focal: Option<StoreId>,
    pub radius: u32,
    pub version: String,
}

impl Default for BundleOptions {
    fn default() -> Self {
        Self {
            windows: vec![Window::SHORT, Window::LONG],
            focal: None,
            radius: 3,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error("focal store {0} does not appear in the panel")]
    UnknownFocal(StoreId),
    #[error(transparent)]
    Lag(#[from] LagError),
}

/// Runs the full analysis on a panel.
///
/// Every item must have a category. The focal store must appear in the
/// panel unless the panel is empty; a focal store with no changes in some
/// category gets an absent lag section for that category.
pub fn build_bundle(
    panel: &PricePanel,
    categories: &CategorySet,
    carried: &CarriedItems,
    options: &BundleOptions,
) -> Result<ReportBundle, BundleError> {
    let log = extract_changes(panel);
    let strata = stratify(&log, categories)?;
    for item in panel.items() {
        if categories.get(item).is_none() {
            return Err(CategoryError::MissingCategory(item.clone()).into());
        }
    }
    if let Some(focal) = &options.focal {
        if !panel.is_empty() && !panel.stores().contains(focal) {
            return Err(BundleError::UnknownFocal(focal.clone()));
        }
    }

    let mut scopes: Vec<(Option<CategoryLabel>, &ChangeLog)> =
        strata.iter().map(|(l, log)| (Some(*l), log)).collect();
    scopes.push((None, &log));

    let mut cluster_stats = Vec::new();
    let mut histograms = Vec::new();
    let mut initiators = Vec::new();
    for &window in &options.windows {
        let pooled = cluster_changelog(&log, window);
        cluster_stats.push(WindowStats {
            window,
            stats: cluster_summary(&pooled),
        });
        initiators.extend(classify_initiators(&pooled));
        for &(category, scoped) in &scopes {
            let clusters = if category.is_none() {
                pooled.clone()
            } else {
                cluster_changelog(scoped, window)
            };
            histograms.push(HistogramEntry {
                category,
                window,
                histogram: store_count_histogram(&clusters),
            });
        }
    }

    let lag_tables = match &options.focal {
        None => Section::Absent("no focal store configured".into()),
        Some(focal) => {
            let mut out = Vec::new();
            for &(category, scoped) in &scopes {
                let table = match lag_distribution(scoped, focal, options.radius, carried) {
                    Ok(t) => Section::Present(LagTable { category, ..t }),
                    Err(LagError::FocalAbsent(_)) => {
                        Section::Absent(format!("{focal} has no price changes in this category"))
                    }
                    Err(e) => return Err(e.into()),
                };
                out.push(CategoryLag { category, table });
            }
            Section::Present(out)
        }
    };

    Ok(ReportBundle {
        metadata: Metadata {
            toolkit_version: options.version.clone(),
            panel_digest: panel.digest(),
            date_range: panel.date_range(),
            focal_store: options.focal.clone(),
            lag_radius: options.radius,
        },
        windows: options.windows.clone(),
        stores: panel.stores().iter().cloned().collect(),
        change_counts: Section::Present(per_store_change_counts(&strata, panel.stores())),
        cluster_stats: Section::Present(cluster_stats),
        histograms: Section::Present(histograms),
        initiators: Section::Present(initiators),
        lag_tables,
    })
}
