//! n-day price-change clusters.
//!
//! All stores' changes to one item are pooled and cut into clusters wherever
//! two consecutive change dates are more than `n` calendar days apart. Changes
//! on the same day have gap 0 and always share a cluster.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::panel::{ChangeLog, Direction, ItemId, PriceChange, StoreId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("window must be at least 1 day, got {0}")]
pub struct InvalidWindow(pub u32);

/// Maximum gap in days between consecutive changes of one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Window(u32);

impl Window {
    pub const SHORT: Window = Window(3);
    pub const LONG: Window = Window(7);

    pub fn new(days: u32) -> Result<Self, InvalidWindow> {
        if days == 0 {
            Err(InvalidWindow(days))
        } else {
            Ok(Self(days))
        }
    }

    pub fn days(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for Window {
    type Error = InvalidWindow;
    fn try_from(n: u32) -> Result<Self, InvalidWindow> {
        Window::new(n)
    }
}

impl From<Window> for u32 {
    fn from(w: Window) -> u32 {
        w.0
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A maximal run of one item's changes whose consecutive dates are at most
/// `window` days apart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub item_id: ItemId,
    pub window: Window,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub distinct_stores: BTreeSet<StoreId>,
    pub changes: Vec<PriceChange>,
}

impl Cluster {
    fn from_run(window: Window, changes: Vec<PriceChange>) -> Self {
        let first = changes.first().expect("clusters are never empty");
        let last = changes.last().expect("clusters are never empty");
        Self {
            item_id: first.item_id.clone(),
            window,
            first_date: first.date,
            last_date: last.date,
            distinct_stores: changes.iter().map(|c| c.store_id.clone()).collect(),
            changes,
        }
    }

    /// Inclusive length in days; a single-day cluster has length 1.
    pub fn length_days(&self) -> u64 {
        (self.last_date - self.first_date).num_days() as u64 + 1
    }

    pub fn is_multi_store(&self) -> bool {
        self.distinct_stores.len() >= 2
    }

    /// Stores with a change on the cluster's first day.
    pub fn initiators(&self) -> impl Iterator<Item = &StoreId> + '_ {
        self.changes
            .iter()
            .take_while(move |c| c.date == self.first_date)
            .map(|c| &c.store_id)
    }
}

/// Splits one item's changes, sorted by (date, store), into n-day clusters.
pub fn segment_clusters(item_changes: &[PriceChange], window: Window) -> Vec<Cluster> {
    debug_assert!(item_changes.windows(2).all(|w| w[0].date <= w[1].date));
    debug_assert!(item_changes.windows(2).all(|w| w[0].item_id == w[1].item_id));
    let n = i64::from(window.days());
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=item_changes.len() {
        let cut = i == item_changes.len()
            || (item_changes[i].date - item_changes[i - 1].date).num_days() > n;
        if cut {
            clusters.push(Cluster::from_run(window, item_changes[start..i].to_vec()));
            start = i;
        }
    }
    clusters
}

/// Clusters every item of a change log, ordered by (item_id, first_date).
pub fn cluster_changelog(changelog: &ChangeLog, window: Window) -> Vec<Cluster> {
    let groups: Vec<&[PriceChange]> = changelog.groups().map(|(_, g)| g).collect();
    groups
        .par_iter()
        .map(|g| segment_clusters(g, window))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Aggregate cluster counts. Averages are derived from exact integer sums.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub total_clusters: u64,
    pub total_changes: u64,
    pub total_length_days: u64,
}

impl ClusterStats {
    /// `None` when there are no clusters.
    pub fn avg_length_days(&self) -> Option<f64> {
        (self.total_clusters > 0).then(|| self.total_length_days as f64 / self.total_clusters as f64)
    }

    pub fn avg_changes_per_cluster(&self) -> Option<f64> {
        (self.total_clusters > 0).then(|| self.total_changes as f64 / self.total_clusters as f64)
    }
}

pub fn cluster_summary(clusters: &[Cluster]) -> ClusterStats {
    clusters.iter().fold(ClusterStats::default(), |mut s, c| {
        s.total_clusters += 1;
        s.total_changes += c.changes.len() as u64;
        s.total_length_days += c.length_days();
        s
    })
}

/// Number of distinct stores in a cluster, with everything above five pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StoreBucket {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
    #[serde(rename = "4")]
    Four,
    #[serde(rename = "5")]
    Five,
    #[serde(rename = ">5")]
    MoreThanFive,
}

impl StoreBucket {
    pub const ALL: [StoreBucket; 6] = [
        StoreBucket::One,
        StoreBucket::Two,
        StoreBucket::Three,
        StoreBucket::Four,
        StoreBucket::Five,
        StoreBucket::MoreThanFive,
    ];

    pub fn for_store_count(n: usize) -> Self {
        match n {
            0 | 1 => StoreBucket::One,
            2 => StoreBucket::Two,
            3 => StoreBucket::Three,
            4 => StoreBucket::Four,
            5 => StoreBucket::Five,
            _ => StoreBucket::MoreThanFive,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StoreBucket::One => "1",
            StoreBucket::Two => "2",
            StoreBucket::Three => "3",
            StoreBucket::Four => "4",
            StoreBucket::Five => "5",
            StoreBucket::MoreThanFive => ">5",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionCounts {
    pub total: u64,
    pub up: u64,
    pub down: u64,
}

/// Changes tallied by how many distinct stores their cluster contains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreCountHistogram {
    pub buckets: BTreeMap<StoreBucket, DirectionCounts>,
}

impl Default for StoreCountHistogram {
    fn default() -> Self {
        Self {
            buckets: StoreBucket::ALL
                .iter()
                .map(|&b| (b, DirectionCounts::default()))
                .collect(),
        }
    }
}

impl StoreCountHistogram {
    pub fn bucket(&self, b: StoreBucket) -> DirectionCounts {
        self.buckets.get(&b).copied().unwrap_or_default()
    }

    pub fn total_changes(&self) -> u64 {
        self.buckets.values().map(|c| c.total).sum()
    }

    /// First bucket whose up + down does not equal its total.
    pub fn split_mismatch(&self) -> Option<StoreBucket> {
        self.buckets
            .iter()
            .find(|(_, c)| c.up + c.down != c.total)
            .map(|(&b, _)| b)
    }
}

pub fn store_count_histogram(clusters: &[Cluster]) -> StoreCountHistogram {
    let mut hist = StoreCountHistogram::default();
    for c in clusters {
        let slot = hist
            .buckets
            .get_mut(&StoreBucket::for_store_count(c.distinct_stores.len()))
            .expect("all buckets seeded");
        for change in &c.changes {
            slot.total += 1;
            match change.direction {
                Direction::Up => slot.up += 1,
                Direction::Down => slot.down += 1,
            }
        }
    }
    hist
}

/// Writes clusters as JSON lines, one cluster per line, fields in declaration order.
pub fn write_clusters_jsonl<W: Write>(mut w: W, clusters: &[Cluster]) -> std::io::Result<()> {
    for c in clusters {
        serde_json::to_writer(&mut w, c)?;
        writeln!(w)?;
    }
    Ok(())
}
