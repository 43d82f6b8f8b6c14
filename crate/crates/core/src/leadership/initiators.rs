use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clusters::{Cluster, Window};
use crate::panel::StoreId;

/// First-day change credits for one store under one window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitiatorStats {
    pub store_id: StoreId,
    pub window: Window,
    /// First-day changes in clusters where no other store ever changed.
    pub single_count: u64,
    /// First-day changes in clusters with at least two distinct stores.
    pub first_of_multiple_count: u64,
}

/// Credits every first-day changer of each cluster.
///
/// Intraday order is unobservable, so all stores changing on a cluster's
/// first day count as initiators. A cluster whose only store is the initiator
/// (even with several changes by that store) is a single change; otherwise
/// each initiator is credited with a first-of-multiple change.
///
/// The result has one entry per store appearing in any cluster, sorted by
/// store id. All clusters must share one window.
pub fn classify_initiators(clusters: &[Cluster]) -> Vec<InitiatorStats> {
    let Some(window) = clusters.first().map(|c| c.window) else {
        return Vec::new();
    };
    debug_assert!(clusters.iter().all(|c| c.window == window));

    let mut tallies: BTreeMap<&StoreId, (u64, u64)> = BTreeMap::new();
    for cluster in clusters {
        for store in &cluster.distinct_stores {
            tallies.entry(store).or_default();
        }
        let multi = cluster.is_multi_store();
        for store in cluster.initiators() {
            let t = tallies.get_mut(store).expect("initiators are cluster stores");
            if multi {
                t.1 += 1;
            } else {
                t.0 += 1;
            }
        }
    }
    tallies
        .into_iter()
        .map(|(store, (single, multi))| InitiatorStats {
            store_id: store.clone(),
            window,
            single_count: single,
            first_of_multiple_count: multi,
        })
        .collect()
}

/// Single-to-first-of-multiple ratio. Lower means more leader-like.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioValue {
    Ratio(f64),
    /// The store never initiated a multi-store cluster.
    NoEvidence,
}

impl RatioValue {
    pub fn value(self) -> Option<f64> {
        match self {
            RatioValue::Ratio(r) => Some(r),
            RatioValue::NoEvidence => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderRatio {
    pub store_id: StoreId,
    pub window: Window,
    pub ratio: RatioValue,
}

pub fn leader_ratio(stats: &InitiatorStats) -> LeaderRatio {
    let ratio = if stats.first_of_multiple_count == 0 {
        RatioValue::NoEvidence
    } else {
        RatioValue::Ratio(stats.single_count as f64 / stats.first_of_multiple_count as f64)
    };
    LeaderRatio {
        store_id: stats.store_id.clone(),
        window: stats.window,
        ratio,
    }
}
