use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::seq::IndexedRandom;
use rand::Rng;

use super::config::SimConfig;
use super::stream;
use crate::panel::{Category, CategoryLabel, CategorySet, ItemId, ListInterval};

/// Names of the two simulated bestseller lists, in item-allocation order.
pub const LIST_NAMES: [(&str, CategoryLabel); 2] = [
    ("nyt", CategoryLabel::NytBestseller),
    ("computer", CategoryLabel::ComputerBestseller),
];

/// Generated list membership, as inclusive day-offset runs per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestsellerCalendar {
    pub start_date: NaiveDate,
    pub horizon_days: u32,
    /// All simulated items in id order, with their candidate list (if any).
    pub items: Vec<(ItemId, Option<&'static str>)>,
    /// item -> (list name, first day, last day) runs, sorted by first day.
    pub runs: BTreeMap<ItemId, Vec<(&'static str, u32, u32)>>,
}

impl BestsellerCalendar {
    pub fn is_listed(&self, item: &ItemId, day: u32) -> bool {
        self.runs
            .get(item)
            .is_some_and(|r| r.iter().any(|&(_, a, b)| a <= day && day <= b))
    }

    /// Days on which an item's listed status flips: entries and the day
    /// after each exit, within the horizon.
    pub fn transitions(&self, item: &ItemId) -> Vec<u32> {
        let mut days = Vec::new();
        for &(_, a, b) in self.runs.get(item).into_iter().flatten() {
            if a > 0 {
                days.push(a);
            }
            if b + 1 < self.horizon_days {
                days.push(b + 1);
            }
        }
        days.sort_unstable();
        days
    }

    fn date(&self, day: u32) -> NaiveDate {
        self.start_date + Days::new(u64::from(day))
    }

    /// Category records: items ever listed get their list's label and
    /// intervals; everything else is random.
    pub fn categories(&self) -> CategorySet {
        let records = self.items.iter().map(|(item, list)| {
            match (self.runs.get(item), list) {
                (Some(runs), Some(list)) if !runs.is_empty() => {
                    let label = LIST_NAMES.iter().find(|(n, _)| n == list).map(|(_, l)| *l).expect("known list");
                    let intervals = runs
                        .iter()
                        .map(|&(name, a, b)| ListInterval {
                            list_name: name.to_string(),
                            start: self.date(a),
                            end: self.date(b),
                        })
                        .collect();
                    Category::new(item.clone(), label, intervals).expect("generated runs are disjoint")
                }
                _ => Category::random(item.clone()),
            }
        });
        CategorySet::from_records(records).expect("one record per item")
    }
}

/// Item ids for a config: list candidates first (nyt, then computer), then
/// random items, numbered from 1.
pub(crate) fn item_roster(config: &SimConfig) -> Vec<(ItemId, Option<&'static str>)> {
    let counts = [
        (config.items.nyt_bestseller, Some(LIST_NAMES[0].0)),
        (config.items.computer_bestseller, Some(LIST_NAMES[1].0)),
        (config.items.random, None),
    ];
    let mut seq = 0u32;
    let mut out = Vec::new();
    for (n, list) in counts {
        for _ in 0..n {
            seq += 1;
            out.push((ItemId::isbn13_from_seq(seq), list));
        }
    }
    out
}

/// Weekly list membership.
///
/// Each list starts with its first `list_size` candidates. At every 7-day
/// boundary each listed item drops off with probability `weekly_turnover`,
/// and the vacancies are refilled uniformly from candidates that were off
/// the list the previous week.
pub fn make_bestseller_calendar(config: &SimConfig, seed: u64) -> BestsellerCalendar {
    let items = item_roster(config);
    let horizon = config.horizon_days;
    let size = config.bestseller.list_size as usize;
    let mut runs: BTreeMap<ItemId, Vec<(&'static str, u32, u32)>> = BTreeMap::new();

    for (list, _) in LIST_NAMES {
        let pool: Vec<&ItemId> = items.iter().filter(|(_, l)| *l == Some(list)).map(|(i, _)| i).collect();
        let mut rng = stream(seed, "calendar", &[list]);
        let mut listed: Vec<usize> = (0..size.min(pool.len())).collect();
        let mut since: BTreeMap<usize, u32> = listed.iter().map(|&i| (i, 0)).collect();

        let mut week_start = 7;
        while week_start < horizon && !listed.is_empty() {
            let mut kept = Vec::with_capacity(listed.len());
            let mut dropped = Vec::new();
            for &i in &listed {
                if rng.random_bool(config.bestseller.weekly_turnover) {
                    dropped.push(i);
                } else {
                    kept.push(i);
                }
            }
            let mut off: Vec<usize> = (0..pool.len()).filter(|i| !listed.contains(i)).collect();
            for _ in 0..dropped.len() {
                let Some(&pick) = off.choose(&mut rng) else { break };
                off.retain(|&i| i != pick);
                kept.push(pick);
                since.insert(pick, week_start);
            }
            for i in dropped {
                let start = since.remove(&i).expect("listed items have a start");
                runs.entry(pool[i].clone()).or_default().push((list, start, week_start - 1));
            }
            kept.sort_unstable();
            listed = kept;
            week_start += 7;
        }
        for (i, start) in since {
            runs.entry(pool[i].clone()).or_default().push((list, start, horizon - 1));
        }
    }
    for r in runs.values_mut() {
        r.sort_by_key(|&(_, a, _)| a);
    }
    BestsellerCalendar {
        start_date: config.start_date,
        horizon_days: horizon,
        items,
        runs,
    }
}
