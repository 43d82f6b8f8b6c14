//! Price-observation panels and price-change extraction.
//!
//! A panel is sparse: a store may have no listed price for an item on a given
//! day. A price change is a difference between one listed price and the next
//! listed price for the same (store, item); days without a listing are skipped
//! rather than treated as changes.

mod category;
mod changes;
mod counts;
mod ids;
mod ingest;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use category::{
    stratify, Category, CategoryError, CategoryLabel, CategorySet, ListInterval, ListingStatus,
    Strata,
};
pub use changes::{extract_changes, ChangeLog, Direction, PriceChange};
pub use counts::{per_store_change_counts, ChangeCountTable};
pub use ids::{Cents, IdError, ItemId, StoreId};
pub use ingest::{ingest_into, ingest_observations, OBSERVATION_HEADER};

/// Date format used by every file format in the toolkit.
pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Parses a strict `YYYY-MM-DD` date.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    if s.len() != 10 {
        return None;
    }
    NaiveDate::parse_from_str(s, DATE_FORMAT).ok()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PriceObservation {
    pub date: NaiveDate,
    pub store_id: StoreId,
    pub item_id: ItemId,
    pub price: Cents,
}

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("bad header: expected {expected:?}, found {found:?}")]
    BadHeader { expected: &'static str, found: String },
    #[error(
        "conflicting prices for store {store}, item {item}, date {date}: {existing} vs {incoming}{}",
        line.map(|l| format!(" (line {l})")).unwrap_or_default()
    )]
    Conflict {
        store: StoreId,
        item: ItemId,
        date: NaiveDate,
        existing: Cents,
        incoming: Cents,
        line: Option<u64>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Summary dimensions of a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PanelSummary {
    pub stores: usize,
    pub items: usize,
    /// Inclusive length of the date range, zero for an empty panel.
    pub days: i64,
    pub observations: usize,
}

/// Validated sparse panel of daily price observations.
///
/// Holds at most one price per (store, item, date). Inserting an identical
/// observation twice is a no-op; inserting a different price for an existing
/// key is an error, since prices are collected once per day.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PricePanel {
    series: BTreeMap<(StoreId, ItemId), BTreeMap<NaiveDate, Cents>>,
    stores: BTreeSet<StoreId>,
    items: BTreeSet<ItemId>,
    date_range: Option<(NaiveDate, NaiveDate)>,
    len: usize,
}

impl PricePanel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_observations(
        observations: impl IntoIterator<Item = PriceObservation>,
    ) -> Result<Self, PanelError> {
        let mut panel = Self::new();
        for obs in observations {
            panel.insert(obs)?;
        }
        Ok(panel)
    }

    /// Returns `true` when the observation was new, `false` for an exact duplicate.
    pub fn insert(&mut self, obs: PriceObservation) -> Result<bool, PanelError> {
        let PriceObservation {
            date,
            store_id,
            item_id,
            price,
        } = obs;
        let series = self
            .series
            .entry((store_id.clone(), item_id.clone()))
            .or_default();
        if let Some(&existing) = series.get(&date) {
            if existing == price {
                return Ok(false);
            }
            return Err(PanelError::Conflict {
                store: store_id,
                item: item_id,
                date,
                existing,
                incoming: price,
                line: None,
            });
        }
        series.insert(date, price);
        self.stores.insert(store_id);
        self.items.insert(item_id);
        self.date_range = Some(match self.date_range {
            None => (date, date),
            Some((lo, hi)) => (lo.min(date), hi.max(date)),
        });
        self.len += 1;
        Ok(true)
    }

    /// Merges every observation of `other` into `self` with the same
    /// dedup/conflict rules as [`PricePanel::insert`].
    pub fn merge(&mut self, other: &PricePanel) -> Result<(), PanelError> {
        for obs in other.observations() {
            self.insert(obs)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stores(&self) -> &BTreeSet<StoreId> {
        &self.stores
    }

    pub fn items(&self) -> &BTreeSet<ItemId> {
        &self.items
    }

    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        self.date_range
    }

    pub fn price(&self, store: &StoreId, item: &ItemId, date: NaiveDate) -> Option<Cents> {
        self.series
            .get(&(store.clone(), item.clone()))
            .and_then(|s| s.get(&date))
            .copied()
    }

    /// One (store, item) price series, if the store ever listed the item.
    pub fn series_of(&self, store: &StoreId, item: &ItemId) -> Option<&BTreeMap<NaiveDate, Cents>> {
        self.series.get(&(store.clone(), item.clone()))
    }

    /// Iterates each (store, item) price series in (store, item) order.
    pub fn series(
        &self,
    ) -> impl Iterator<Item = (&StoreId, &ItemId, &BTreeMap<NaiveDate, Cents>)> + '_ {
        self.series.iter().map(|((s, i), m)| (s, i, m))
    }

    /// All observations in canonical order: (date, store_id, item_id).
    pub fn observations(&self) -> Vec<PriceObservation> {
        let mut out: Vec<PriceObservation> = self
            .series
            .iter()
            .flat_map(|((store, item), dates)| {
                dates.iter().map(move |(&date, &price)| PriceObservation {
                    date,
                    store_id: store.clone(),
                    item_id: item.clone(),
                    price,
                })
            })
            .collect();
        out.sort();
        out
    }

    pub fn summary(&self) -> PanelSummary {
        PanelSummary {
            stores: self.stores.len(),
            items: self.items.len(),
            days: self
                .date_range
                .map(|(lo, hi)| (hi - lo).num_days() + 1)
                .unwrap_or(0),
            observations: self.len,
        }
    }

    /// Writes the panel in the observation CSV format, canonical row order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{OBSERVATION_HEADER}")?;
        for obs in self.observations() {
            writeln!(
                w,
                "{},{},{},{}",
                obs.date.format(DATE_FORMAT),
                obs.store_id,
                obs.item_id,
                obs.price
            )?;
        }
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// SHA-256 of the canonical CSV rendering, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(day: u32, store: &str, item: &str, price: u64) -> PriceObservation {
        PriceObservation {
            date: NaiveDate::from_ymd_opt(2000, 1, day).unwrap(),
            store_id: StoreId::new(store).unwrap(),
            item_id: ItemId::new(item).unwrap(),
            price: Cents(price),
        }
    }

    const X: &str = "9780000000002";

    #[test]
    fn exact_duplicates_collapse() {
        let mut p = PricePanel::new();
        assert!(p.insert(obs(1, "a", X, 999)).unwrap());
        assert!(!p.insert(obs(1, "a", X, 999)).unwrap());
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn conflicting_duplicate_names_key() {
        let mut p = PricePanel::new();
        p.insert(obs(1, "a", X, 999)).unwrap();
        let err = p.insert(obs(1, "a", X, 1099)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("store a"), "{msg}");
        assert!(msg.contains(X), "{msg}");
        assert!(msg.contains("2000-01-01"), "{msg}");
    }

    #[test]
    fn summary_and_canonical_order() {
        let p = PricePanel::from_observations([
            obs(3, "b", X, 5),
            obs(1, "b", X, 5),
            obs(1, "a", X, 7),
        ])
        .unwrap();
        let s = p.summary();
        assert_eq!((s.stores, s.items, s.days, s.observations), (2, 1, 3, 3));
        let order: Vec<_> = p
            .observations()
            .iter()
            .map(|o| (o.date.format("%d").to_string(), o.store_id.to_string()))
            .collect();
        assert_eq!(
            order,
            vec![
                ("01".into(), "a".into()),
                ("01".into(), "b".into()),
                ("03".into(), "b".into())
            ]
        );
    }

    #[test]
    fn strict_dates() {
        assert!(parse_date("2000-01-05").is_some());
        assert!(parse_date("2000-1-5").is_none());
        assert!(parse_date("2000-02-30").is_none());
    }
}
