mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::oracle::{self, RandomPanel};
use lagscope::clusters::{
    cluster_changelog, cluster_summary, segment_clusters, store_count_histogram, Window,
};
use lagscope::leadership::{classify_initiators, lag_distribution, CarriedItems};
use lagscope::panel::{
    extract_changes, Cents, Direction, ItemId, PriceChange, PriceObservation, PricePanel, StoreId,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn changes_on(days: &[i64]) -> Vec<PriceChange> {
    // one store per change on a shared day so (date, store) stays unique
    let mut per_day: BTreeMap<i64, usize> = BTreeMap::new();
    days.iter()
        .map(|&d| {
            let slot = per_day.entry(d).or_default();
            *slot += 1;
            PriceChange {
                store_id: StoreId::new(format!("s{slot}")).unwrap(),
                item_id: ItemId::new("9780000000002").unwrap(),
                date: oracle::day(d),
                prev_date: oracle::day(d - 1),
                prev_price: Cents(1),
                new_price: Cents(2),
                direction: Direction::Up,
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn segmentation_matches_grid_oracle(
        mut days in prop::collection::vec(0i64..365, 0..200),
        n in prop::sample::select(vec![1u32, 2, 3, 7]),
    ) {
        days.sort();
        let clusters = segment_clusters(&changes_on(&days), Window::new(n).unwrap());
        let got: Vec<usize> = clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| std::iter::repeat_n(i, c.changes.len()))
            .collect();
        prop_assert_eq!(got, oracle::grid_segment(&days, i64::from(n)));
    }
}

fn panels(count: usize, seed: u64) -> Vec<RandomPanel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| oracle::random_panel(&mut rng, 10, 20, 60)).collect()
}

#[test]
fn cluster_conservation_monotonicity_and_boundaries() {
    for rp in panels(100, 1) {
        let log = extract_changes(&rp.panel);
        let mut totals = Vec::new();
        for n in [1, 2, 3, 7] {
            let w = Window::new(n).unwrap();
            let clusters = cluster_changelog(&log, w);
            let stats = cluster_summary(&clusters);
            assert_eq!(stats.total_changes as usize, log.len());
            if let Some(avg) = stats.avg_changes_per_cluster() {
                assert!((avg * stats.total_clusters as f64 - stats.total_changes as f64).abs() < 1e-9);
            }
            for pair in clusters.windows(2) {
                if pair[0].item_id == pair[1].item_id {
                    let gap = (pair[1].first_date - pair[0].last_date).num_days();
                    assert!(gap > i64::from(n), "boundary gap {gap} for n={n}");
                }
            }
            for c in &clusters {
                assert!(c.changes.windows(2).all(|w| (w[1].date - w[0].date).num_days() <= i64::from(n)));
                let stores: BTreeSet<_> = c.changes.iter().map(|x| x.store_id.clone()).collect();
                assert_eq!(stores, c.distinct_stores);
            }
            let h = store_count_histogram(&clusters);
            assert_eq!(h.split_mismatch(), None);
            assert_eq!(h.total_changes() as usize, log.len());
            totals.push(stats.total_clusters);
        }
        assert!(totals.windows(2).all(|w| w[1] <= w[0]), "{totals:?}");
    }
}

#[test]
fn initiators_match_oracle_and_account_for_every_cluster() {
    for rp in panels(100, 2) {
        let log = extract_changes(&rp.panel);
        let raw = rp.raw_changes();
        assert_eq!(raw.len(), log.len());
        for n in [3u32, 7] {
            let clusters = cluster_changelog(&log, Window::new(n).unwrap());
            let got: BTreeMap<String, (u64, u64)> = classify_initiators(&clusters)
                .into_iter()
                .map(|s| (s.store_id.to_string(), (s.single_count, s.first_of_multiple_count)))
                .collect();
            assert_eq!(got, oracle::initiator_oracle(&raw, i64::from(n)));

            let credits: u64 = got.values().map(|(a, b)| a + b).sum();
            assert!(credits >= clusters.len() as u64);
            let singles: u64 = got.values().map(|(a, _)| a).sum();
            let single_store_clusters = clusters.iter().filter(|c| !c.is_multi_store()).count();
            assert_eq!(singles, single_store_clusters as u64);
        }
    }
}

fn compare_lag(rp: &RandomPanel, focal: &str, k: u32) -> bool {
    let log = extract_changes(&rp.panel);
    let focal_id = StoreId::new(focal).unwrap();
    let table = match lag_distribution(&log, &focal_id, k, &CarriedItems::from_panel(&rp.panel)) {
        Ok(t) => t,
        Err(_) => {
            assert!(rp.raw_changes().iter().all(|c| c.store != focal));
            return false;
        }
    };
    let expected = oracle::lag_oracle(&rp.raw_changes(), &rp.carried(), focal, i64::from(k));
    assert_eq!(table.rows.len(), expected.len());
    for (store, cells) in &expected {
        let row = table.row(&StoreId::new(store.as_str()).unwrap()).unwrap();
        for (cell, &(num, den)) in row.iter().zip(cells) {
            assert_eq!((cell.numerator, cell.denominator), (num, den), "{store}");
            let f = if den == 0 { 0.0 } else { num as f64 / den as f64 };
            assert_eq!(cell.fraction(), f);
            assert!((0.0..=1.0).contains(&cell.fraction()));
            assert!(cell.numerator <= cell.denominator);
        }
    }
    true
}

#[test]
fn lag_tables_match_exhaustive_oracle() {
    let mut checked = 0;
    for (i, rp) in panels(60, 3).iter().enumerate() {
        let k = 1 + (i % 4) as u32;
        for s in rp.panel.stores().iter().take(3) {
            checked += usize::from(compare_lag(rp, s.as_str(), k));
        }
    }
    assert!(checked > 50, "only {checked} tables had a focal store with changes");
}

fn transform(rp: &RandomPanel, store_map: impl Fn(&str) -> String, shift: i64) -> PricePanel {
    PricePanel::from_observations(rp.panel.observations().into_iter().map(|o| PriceObservation {
        date: o.date + chrono::Duration::days(shift),
        store_id: StoreId::new(store_map(o.store_id.as_str())).unwrap(),
        item_id: o.item_id,
        price: o.price,
    }))
    .unwrap()
}

type Snapshot = (
    Vec<(String, u64, u64)>,
    Vec<(String, Vec<(u64, u64)>)>,
    Vec<(u64, u64, u64)>,
);

fn snapshot(panel: &PricePanel, focal: &str) -> Snapshot {
    let log = extract_changes(panel);
    let clusters = cluster_changelog(&log, Window::SHORT);
    let mut init: Vec<_> = classify_initiators(&clusters)
        .into_iter()
        .map(|s| (s.store_id.to_string(), s.single_count, s.first_of_multiple_count))
        .collect();
    init.sort();
    let mut lag: Vec<_> = lag_distribution(&log, &StoreId::new(focal).unwrap(), 3, &CarriedItems::from_panel(panel))
        .map(|t| {
            t.rows
                .iter()
                .map(|(s, cells)| (s.to_string(), cells.iter().map(|c| (c.numerator, c.denominator)).collect()))
                .collect()
        })
        .unwrap_or_default();
    lag.sort();
    let h = store_count_histogram(&clusters);
    let hist = h.buckets.values().map(|c| (c.total, c.up, c.down)).collect();
    (init, lag, hist)
}

#[test]
fn relabeling_and_date_shift_change_nothing_but_labels() {
    for rp in panels(30, 4) {
        let Some(focal) = rp.panel.stores().first().map(StoreId::to_string) else {
            continue;
        };
        let base = snapshot(&rp.panel, &focal);

        let shifted = snapshot(&transform(&rp, |s| s.to_string(), 1234), &focal);
        assert_eq!(base, shifted);

        // reverse-alphabetical bijection; map names back before comparing
        let rename = |s: &str| format!("z{}", s.chars().rev().collect::<String>());
        let unname = |s: &str| s[1..].chars().rev().collect::<String>();
        let (mut init, mut lag, hist) = snapshot(&transform(&rp, rename, 0), &rename(&focal));
        init.iter_mut().for_each(|r| r.0 = unname(&r.0));
        lag.iter_mut().for_each(|r| r.0 = unname(&r.0));
        init.sort();
        lag.sort();
        assert_eq!(base, (init, lag, hist));
    }
}
