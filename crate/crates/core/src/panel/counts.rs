use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{CategoryLabel, Strata, StoreId};

/// Price changes per store per category, with a totals row.
///
/// `totals` is stored rather than derived so that a rendered report can
/// verify it against the column sums.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeCountTable {
    pub categories: Vec<CategoryLabel>,
    pub rows: BTreeMap<StoreId, BTreeMap<CategoryLabel, u64>>,
    pub totals: BTreeMap<CategoryLabel, u64>,
}

impl ChangeCountTable {
    pub fn count(&self, store: &StoreId, label: CategoryLabel) -> u64 {
        self.rows
            .get(store)
            .and_then(|r| r.get(&label))
            .copied()
            .unwrap_or(0)
    }

    pub fn column_sums(&self) -> BTreeMap<CategoryLabel, u64> {
        self.categories
            .iter()
            .map(|&l| (l, self.rows.values().map(|r| r.get(&l).copied().unwrap_or(0)).sum()))
            .collect()
    }

    /// Returns the first category whose stored total differs from its column sum.
    pub fn totals_mismatch(&self) -> Option<CategoryLabel> {
        let sums = self.column_sums();
        self.categories
            .iter()
            .copied()
            .find(|l| sums.get(l) != self.totals.get(l))
    }
}

/// Tallies changes per store and category.
///
/// Every store in `stores` gets a row even with no changes; stores that
/// appear only in the strata are added as well.
pub fn per_store_change_counts<'a>(
    strata: &Strata,
    stores: impl IntoIterator<Item = &'a StoreId>,
) -> ChangeCountTable {
    let categories: Vec<CategoryLabel> = strata.keys().copied().collect();
    let mut universe: BTreeSet<StoreId> = stores.into_iter().cloned().collect();
    for log in strata.values() {
        universe.extend(log.iter().map(|c| c.store_id.clone()));
    }
    let mut rows: BTreeMap<StoreId, BTreeMap<CategoryLabel, u64>> = universe
        .into_iter()
        .map(|s| (s, categories.iter().map(|&l| (l, 0)).collect()))
        .collect();
    for (&label, log) in strata {
        for change in log.iter() {
            *rows
                .get_mut(&change.store_id)
                .and_then(|r| r.get_mut(&label))
                .expect("store and label seeded") += 1;
        }
    }
    let mut table = ChangeCountTable {
        categories,
        rows,
        totals: BTreeMap::new(),
    };
    table.totals = table.column_sums();
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{
        extract_changes, stratify, Category, CategorySet, Cents, ItemId, PriceObservation,
        PricePanel,
    };
    use chrono::NaiveDate;

    #[test]
    fn single_change_counts_once() {
        let item = ItemId::new("9780000000002").unwrap();
        let s = StoreId::new("s").unwrap();
        let panel = PricePanel::from_observations((1..=2).map(|day| PriceObservation {
            date: NaiveDate::from_ymd_opt(2000, 1, day).unwrap(),
            store_id: s.clone(),
            item_id: item.clone(),
            price: Cents(u64::from(day)),
        }))
        .unwrap();
        let cats = CategorySet::from_records([Category::random(item)]).unwrap();
        let strata = stratify(&extract_changes(&panel), &cats).unwrap();
        let idle = StoreId::new("idle").unwrap();
        let t = per_store_change_counts(&strata, [&s, &idle]);
        assert_eq!(t.count(&s, CategoryLabel::Random), 1);
        assert_eq!(t.count(&idle, CategoryLabel::Random), 0);
        assert_eq!(t.totals[&CategoryLabel::Random], 1);
        assert_eq!(t.totals[&CategoryLabel::NytBestseller], 0);
        assert_eq!(t.totals_mismatch(), None);
    }
}
