use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Cents, ItemId, PricePanel, StoreId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// One store's move from one listed price to the next listed price of an item.
///
/// Dated at the later observation: `date` is the first day the new price was
/// seen, `prev_date` the last day the old one was.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceChange {
    pub store_id: StoreId,
    pub item_id: ItemId,
    pub date: NaiveDate,
    pub prev_date: NaiveDate,
    pub prev_price: Cents,
    pub new_price: Cents,
    pub direction: Direction,
}

impl PriceChange {
    /// Returns `None` when the prices are equal (no change).
    pub fn between(
        store_id: StoreId,
        item_id: ItemId,
        (prev_date, prev_price): (NaiveDate, Cents),
        (date, new_price): (NaiveDate, Cents),
    ) -> Option<Self> {
        let direction = match new_price.cmp(&prev_price) {
            std::cmp::Ordering::Greater => Direction::Up,
            std::cmp::Ordering::Less => Direction::Down,
            std::cmp::Ordering::Equal => return None,
        };
        Some(Self {
            store_id,
            item_id,
            date,
            prev_date,
            prev_price,
            new_price,
            direction,
        })
    }
}

/// Price changes grouped by item; each group is sorted by (date, store_id).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeLog {
    by_item: BTreeMap<ItemId, Vec<PriceChange>>,
}

impl ChangeLog {
    /// Builds a log from changes in any order. Changes sharing an
    /// (item, date, store) key are collapsed to the first one given.
    pub fn from_changes(changes: impl IntoIterator<Item = PriceChange>) -> Self {
        let mut by_item: BTreeMap<ItemId, Vec<PriceChange>> = BTreeMap::new();
        for c in changes {
            by_item.entry(c.item_id.clone()).or_default().push(c);
        }
        for group in by_item.values_mut() {
            group.sort_by(|a, b| (a.date, &a.store_id).cmp(&(b.date, &b.store_id)));
            group.dedup_by(|b, a| a.date == b.date && a.store_id == b.store_id);
        }
        Self { by_item }
    }

    pub fn len(&self) -> usize {
        self.by_item.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_item.is_empty()
    }

    /// Iterates (item, that item's changes) in item order.
    pub fn groups(&self) -> impl Iterator<Item = (&ItemId, &[PriceChange])> + '_ {
        self.by_item.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn item_changes(&self, item: &ItemId) -> &[PriceChange] {
        self.by_item.get(item).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All changes in (item_id, date, store_id) order.
    pub fn iter(&self) -> impl Iterator<Item = &PriceChange> + '_ {
        self.by_item.values().flatten()
    }

    pub fn stores(&self) -> std::collections::BTreeSet<&StoreId> {
        self.iter().map(|c| &c.store_id).collect()
    }
}

/// Extracts every price change from a panel.
///
/// Consecutive listed prices in each (store, item) series are compared; a
/// difference yields one change dated at the later listing. Missing days in
/// between are ignored and the first listing of a series never yields a change.
pub fn extract_changes(panel: &PricePanel) -> ChangeLog {
    let mut changes = Vec::new();
    for (store, item, series) in panel.series() {
        let mut prev: Option<(NaiveDate, Cents)> = None;
        for (&date, &price) in series {
            if let Some(p) = prev {
                changes.extend(PriceChange::between(
                    store.clone(),
                    item.clone(),
                    p,
                    (date, price),
                ));
            }
            prev = Some((date, price));
        }
    }
    ChangeLog::from_changes(changes)
}
