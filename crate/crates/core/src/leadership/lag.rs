use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::ops::RangeInclusive;

use chrono::{Days, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::panel::{CategoryLabel, ChangeLog, ItemId, PricePanel, StoreId};

#[derive(Debug, Error)]
pub enum LagError {
    #[error("focal store {0} has no price changes")]
    FocalAbsent(StoreId),
    #[error("lag radius must be at least 1, got {0}")]
    InvalidRadius(u32),
    #[error("carried list line {line}: {message}")]
    Malformed { line: u64, message: String },
}

/// Which stores stock which items.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CarriedItems {
    by_item: BTreeMap<ItemId, BTreeSet<StoreId>>,
}

impl CarriedItems {
    /// A store carries an item if it listed a price for it at least once.
    pub fn from_panel(panel: &PricePanel) -> Self {
        Self::from_pairs(panel.series().map(|(s, i, _)| (s.clone(), i.clone())))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (StoreId, ItemId)>) -> Self {
        let mut by_item: BTreeMap<ItemId, BTreeSet<StoreId>> = BTreeMap::new();
        for (s, i) in pairs {
            by_item.entry(i).or_default().insert(s);
        }
        Self { by_item }
    }

    /// Reads a `store_id,item_id` CSV.
    pub fn read_csv<R: Read>(source: R) -> Result<Self, LagError> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
        let header_ok = reader
            .headers()
            .map(|h| h.iter().collect::<Vec<_>>() == ["store_id", "item_id"])
            .unwrap_or(false);
        if !header_ok {
            return Err(LagError::Malformed {
                line: 1,
                message: "expected header store_id,item_id".into(),
            });
        }
        let mut pairs = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| LagError::Malformed {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| LagError::Malformed { line, message };
            if rec.len() != 2 {
                return Err(bad(format!("expected 2 fields, found {}", rec.len())));
            }
            let s = StoreId::new(&rec[0]).map_err(|e| bad(e.to_string()))?;
            let i = ItemId::new(&rec[1]).map_err(|e| bad(e.to_string()))?;
            pairs.push((s, i));
        }
        Ok(Self::from_pairs(pairs))
    }

    pub fn carries(&self, store: &StoreId, item: &ItemId) -> bool {
        self.by_item.get(item).is_some_and(|s| s.contains(store))
    }

    pub fn carriers(&self, item: &ItemId) -> impl Iterator<Item = &StoreId> + '_ {
        self.by_item.get(item).into_iter().flatten()
    }

    pub fn stores(&self) -> BTreeSet<&StoreId> {
        self.by_item.values().flatten().collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagCell {
    pub numerator: u64,
    pub denominator: u64,
}

impl LagCell {
    /// numerator / denominator, or 0 when the cell has no support.
    pub fn fraction(self) -> f64 {
        if self.denominator == 0 {
            0.0
        } else {
            self.numerator as f64 / self.denominator as f64
        }
    }

    pub fn zero_support(self) -> bool {
        self.denominator == 0
    }
}

/// For one focal store: per other store and relative day d in [-k, +k], the
/// pooled share of the focal store's changed items (that the other store
/// carries) which the other store also re-priced on day t + d.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagTable {
    pub focal: StoreId,
    pub radius: u32,
    pub category: Option<CategoryLabel>,
    /// Cells indexed by d + radius.
    pub rows: BTreeMap<StoreId, Vec<LagCell>>,
}

impl LagTable {
    pub fn days(&self) -> RangeInclusive<i32> {
        let k = self.radius as i32;
        -k..=k
    }

    pub fn row(&self, store: &StoreId) -> Option<&[LagCell]> {
        self.rows.get(store).map(Vec::as_slice)
    }

    pub fn cell(&self, store: &StoreId, day: i32) -> Option<LagCell> {
        let idx = usize::try_from(day + self.radius as i32).ok()?;
        self.rows.get(store)?.get(idx).copied()
    }

    pub fn with_category(mut self, category: CategoryLabel) -> Self {
        self.category = Some(category);
        self
    }
}

/// Partial counts over a subset of focal dates. Merging is elementwise
/// addition, so any grouping of dates gives the same total.
#[derive(Debug, Clone, PartialEq, Eq)]
struct LagCounts {
    width: usize,
    numerators: Vec<u64>,
    denominators: Vec<u64>,
}

impl LagCounts {
    fn zero(rows: usize, width: usize) -> Self {
        Self {
            width,
            numerators: vec![0; rows * width],
            denominators: vec![0; rows],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.numerators.iter_mut().zip(other.numerators) {
            *a += b;
        }
        for (a, b) in self.denominators.iter_mut().zip(other.denominators) {
            *a += b;
        }
        self
    }
}

fn shift(date: NaiveDate, days: i64) -> Option<NaiveDate> {
    if days >= 0 {
        date.checked_add_days(Days::new(days as u64))
    } else {
        date.checked_sub_days(Days::new(days.unsigned_abs()))
    }
}

/// Builds the lag table of `focal` over `changelog`.
///
/// For every date t on which the focal store changed a set of items, each
/// store o and each d in [-radius, +radius] accumulates
///   numerator   += #{ changed items o carries and o also changed on t + d }
///   denominator += #{ changed items o carries }
/// and fractions are the pooled ratios over all t. The focal store's own row
/// counts its re-changes at d != 0 and is fixed at 0 for d = 0.
///
/// Rows cover every store that carries an item or appears in the log.
pub fn lag_distribution(
    changelog: &ChangeLog,
    focal: &StoreId,
    radius: u32,
    carried: &CarriedItems,
) -> Result<LagTable, LagError> {
    if radius == 0 {
        return Err(LagError::InvalidRadius(radius));
    }
    let mut focal_dates: BTreeMap<NaiveDate, Vec<&ItemId>> = BTreeMap::new();
    for c in changelog.iter().filter(|c| &c.store_id == focal) {
        focal_dates.entry(c.date).or_default().push(&c.item_id);
    }
    if focal_dates.is_empty() {
        return Err(LagError::FocalAbsent(focal.clone()));
    }

    let mut universe: BTreeSet<&StoreId> = carried.stores();
    universe.extend(changelog.stores());
    universe.insert(focal);
    let universe: Vec<&StoreId> = universe.into_iter().collect();
    let row_of: BTreeMap<&StoreId, usize> =
        universe.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let k = i64::from(radius);
    let width = 2 * radius as usize + 1;

    let counts = focal_dates
        .par_iter()
        .map(|(&t, items)| {
            let mut acc = LagCounts::zero(universe.len(), width);
            let (lo, hi) = (shift(t, -k), shift(t, k));
            for &item in items {
                for store in carried.carriers(item) {
                    acc.denominators[row_of[store]] += 1;
                }
                let changes = changelog.item_changes(item);
                let start = lo.map_or(0, |lo| changes.partition_point(|c| c.date < lo));
                let end = hi.map_or(changes.len(), |hi| changes.partition_point(|c| c.date <= hi));
                for c in &changes[start..end] {
                    let d = (c.date - t).num_days();
                    if d == 0 && &c.store_id == focal {
                        continue;
                    }
                    if !carried.carries(&c.store_id, item) {
                        continue;
                    }
                    let row = row_of[&c.store_id];
                    acc.numerators[row * width + (d + k) as usize] += 1;
                }
            }
            acc
        })
        .reduce(|| LagCounts::zero(universe.len(), width), LagCounts::merge);

    let rows = universe
        .iter()
        .enumerate()
        .map(|(r, &store)| {
            let den = counts.denominators[r];
            let cells = (0..width)
                .map(|c| LagCell {
                    numerator: counts.numerators[r * counts.width + c],
                    denominator: den,
                })
                .collect();
            (store.clone(), cells)
        })
        .collect();

    Ok(LagTable {
        focal: focal.clone(),
        radius,
        category: None,
        rows,
    })
}

/// A store whose same-day-or-later response to the focal store is high.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowFlag {
    pub store_id: StoreId,
    pub peak_day: i32,
    pub peak_fraction: f64,
}

/// Flags every non-focal store whose maximum fraction over d in [0, +k]
/// exceeds `threshold`, most concentrated first. Informational only.
pub fn follow_screen(table: &LagTable, threshold: f64) -> Vec<FollowFlag> {
    let k = table.radius as usize;
    let mut flags: Vec<FollowFlag> = table
        .rows
        .iter()
        .filter(|(store, _)| **store != table.focal)
        .filter_map(|(store, cells)| {
            let (offset, peak) = cells[k..]
                .iter()
                .map(|c| c.fraction())
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, f)| if f > best.1 { (i, f) } else { best });
            (peak > threshold).then(|| FollowFlag {
                store_id: store.clone(),
                peak_day: offset as i32,
                peak_fraction: peak,
            })
        })
        .collect();
    flags.sort_by(|a, b| {
        b.peak_fraction
            .total_cmp(&a.peak_fraction)
            .then_with(|| a.store_id.cmp(&b.store_id))
    });
    flags
}
