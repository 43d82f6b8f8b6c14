//! Brute-force reference implementations used to cross-check the library.
//!
//! These work on plain integers and strings and never call into the code
//! they check, apart from building the inputs.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use lagscope::panel::{Cents, ItemId, PriceObservation, PricePanel, StoreId};
use rand::Rng;

pub fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).unwrap()
}

pub fn day(n: i64) -> NaiveDate {
    epoch() + chrono::Duration::days(n)
}

pub fn day_index(d: NaiveDate) -> i64 {
    (d - epoch()).num_days()
}

/// Segments sorted day numbers on an occupancy grid: walk every calendar day,
/// count the empty days since the last occupied one, and open a new cluster
/// when an occupied day follows more than `n - 1` empty days.
/// Returns the cluster index of each input position.
pub fn grid_segment(days: &[i64], n: i64) -> Vec<usize> {
    if days.is_empty() {
        return Vec::new();
    }
    let lo = *days.iter().min().unwrap();
    let hi = *days.iter().max().unwrap();
    let mut occupied = vec![false; (hi - lo + 1) as usize];
    for &d in days {
        occupied[(d - lo) as usize] = true;
    }
    let mut cluster_of_day = vec![usize::MAX; occupied.len()];
    let mut cluster = 0usize;
    let mut empty_run: i64 = 0;
    let mut seen_any = false;
    for (i, &occ) in occupied.iter().enumerate() {
        if occ {
            if seen_any && empty_run + 1 > n {
                cluster += 1;
            }
            cluster_of_day[i] = cluster;
            seen_any = true;
            empty_run = 0;
        } else {
            empty_run += 1;
        }
    }
    days.iter().map(|&d| cluster_of_day[(d - lo) as usize]).collect()
}

/// A change reduced to integers: (store, item, day).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RawChange {
    pub store: String,
    pub item: String,
    pub day: i64,
    pub up: bool,
}

/// Per-store (single, first_of_multiple) from an independent segmentation of
/// each item's changes.
pub fn initiator_oracle(changes: &[RawChange], n: i64) -> BTreeMap<String, (u64, u64)> {
    let mut out: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    let items: BTreeSet<&String> = changes.iter().map(|c| &c.item).collect();
    for item in items {
        let mut mine: Vec<&RawChange> = changes.iter().filter(|c| &c.item == item).collect();
        mine.sort_by_key(|c| c.day);
        let days: Vec<i64> = mine.iter().map(|c| c.day).collect();
        let ids = grid_segment(&days, n);
        let n_clusters = ids.iter().max().map_or(0, |m| m + 1);
        for k in 0..n_clusters {
            let members: Vec<&&RawChange> =
                mine.iter().zip(&ids).filter(|(_, &id)| id == k).map(|(c, _)| c).collect();
            let first = members.iter().map(|c| c.day).min().unwrap();
            let stores: BTreeSet<&String> = members.iter().map(|c| &c.store).collect();
            for s in &stores {
                out.entry((*s).clone()).or_default();
            }
            for c in members.iter().filter(|c| c.day == first) {
                let e = out.get_mut(&c.store).unwrap();
                if stores.len() >= 2 {
                    e.1 += 1;
                } else {
                    e.0 += 1;
                }
            }
        }
    }
    out
}

/// Exhaustive lag counting: for every focal change (t, item), every store and
/// every relative day, test membership by scanning the full change list.
/// Returns per store a vector of (numerator, denominator) for d = -k..=k.
pub fn lag_oracle(
    changes: &[RawChange],
    carried: &BTreeSet<(String, String)>,
    focal: &str,
    k: i64,
) -> BTreeMap<String, Vec<(u64, u64)>> {
    let mut universe: BTreeSet<String> = carried.iter().map(|(s, _)| s.clone()).collect();
    universe.extend(changes.iter().map(|c| c.store.clone()));
    universe.insert(focal.to_string());

    let mut table: BTreeMap<String, Vec<(u64, u64)>> = universe
        .iter()
        .map(|s| (s.clone(), vec![(0, 0); (2 * k + 1) as usize]))
        .collect();
    for fc in changes.iter().filter(|c| c.store == focal) {
        for store in &universe {
            let carries = carried.contains(&(store.clone(), fc.item.clone()));
            for d in -k..=k {
                let cell = &mut table.get_mut(store).unwrap()[(d + k) as usize];
                if !carries {
                    continue;
                }
                cell.1 += 1;
                if store == focal && d == 0 {
                    continue;
                }
                let hit = changes
                    .iter()
                    .any(|c| &c.store == store && c.item == fc.item && c.day == fc.day + d);
                if hit {
                    cell.0 += 1;
                }
            }
        }
    }
    table
}

pub fn store_name(i: usize) -> String {
    format!("store{i:02}")
}

pub fn item_name(i: usize) -> String {
    ItemId::isbn13_from_seq(i as u32).to_string()
}

/// A random sparse panel, plus the raw observation grid it was built from.
pub struct RandomPanel {
    pub panel: PricePanel,
    /// (store, item) -> day -> price
    pub grid: BTreeMap<(String, String), BTreeMap<i64, u64>>,
}

impl RandomPanel {
    pub fn carried(&self) -> BTreeSet<(String, String)> {
        self.grid.keys().cloned().collect()
    }

    /// Changes recomputed straight from the grid.
    pub fn raw_changes(&self) -> Vec<RawChange> {
        let mut out = Vec::new();
        for ((s, i), series) in &self.grid {
            let v: Vec<(&i64, &u64)> = series.iter().collect();
            for w in v.windows(2) {
                if w[0].1 != w[1].1 {
                    out.push(RawChange {
                        store: s.clone(),
                        item: i.clone(),
                        day: *w[1].0,
                        up: w[1].1 > w[0].1,
                    });
                }
            }
        }
        out.sort();
        out
    }
}

pub fn random_panel<R: Rng>(rng: &mut R, max_stores: usize, max_items: usize, max_days: i64) -> RandomPanel {
    let n_stores = rng.random_range(1..=max_stores);
    let n_items = rng.random_range(1..=max_items);
    let n_days = rng.random_range(1..=max_days);
    let p_carry = rng.random_range(0.3..1.0);
    let p_obs = rng.random_range(0.5..1.0);
    let p_change = rng.random_range(0.02..0.4);
    let mut grid = BTreeMap::new();
    for s in 0..n_stores {
        for i in 0..n_items {
            if !rng.random_bool(p_carry) {
                continue;
            }
            let mut price: u64 = rng.random_range(500..3000);
            let mut series = BTreeMap::new();
            for d in 0..n_days {
                if rng.random_bool(p_change) {
                    let step = rng.random_range(1..200u64);
                    price = if rng.random_bool(0.5) { price + step } else { price.saturating_sub(step).max(1) };
                }
                if rng.random_bool(p_obs) {
                    series.insert(d, price);
                }
            }
            if !series.is_empty() {
                grid.insert((store_name(s), item_name(i)), series);
            }
        }
    }
    let panel = PricePanel::from_observations(grid.iter().flat_map(|((s, i), series)| {
        series.iter().map(move |(&d, &p)| PriceObservation {
            date: day(d),
            store_id: StoreId::new(s.as_str()).unwrap(),
            item_id: ItemId::new(i.as_str()).unwrap(),
            price: Cents(p),
        })
    }))
    .unwrap();
    RandomPanel { panel, grid }
}
