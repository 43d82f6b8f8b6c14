use std::collections::BTreeMap;

use chrono::Days;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::calendar::{make_bestseller_calendar, BestsellerCalendar};
use super::config::{SimConfig, StoreBehavior, StoreSpec};
use super::truth::GroundTruth;
use super::{stream, SimError};
use crate::panel::{CategorySet, Cents, ItemId, PriceObservation, PricePanel};

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub panel: PricePanel,
    pub categories: CategorySet,
    pub calendar: BestsellerCalendar,
    pub truth: GroundTruth,
    /// Cells (store, item, day) that were generated but not observed.
    pub dropped_observations: u64,
}

fn scaled(list: u64, factor: f64) -> u64 {
    ((list as f64 * factor).round() as u64).max(1)
}

/// Per-store state while simulating one item.
struct Agent<'a> {
    spec: &'a StoreSpec,
    rng: ChaCha8Rng,
    missing: ChaCha8Rng,
    price: u64,
    /// day -> prices to set that day, in scheduling order
    pending: BTreeMap<u32, Vec<u64>>,
    /// indices (into the agent list) of stores following this one
    followers: Vec<usize>,
}

fn responder_price(list: u64, listed: bool, discount_pct: f64, markup_pct: f64) -> u64 {
    if listed {
        scaled(list, 1.0 - discount_pct / 100.0)
    } else {
        scaled(list, 1.0 + markup_pct / 100.0)
    }
}

/// Runs every store on one item and returns the observations kept plus the
/// number dropped.
fn simulate_item(
    config: &SimConfig,
    order: &[&StoreSpec],
    calendar: &BestsellerCalendar,
    item: &ItemId,
    seed: u64,
) -> (Vec<PriceObservation>, u64) {
    let list = stream(seed, "list_price", &[item.as_str()])
        .random_range(config.list_prices.min_cents..=config.list_prices.max_cents);
    let listed_day0 = calendar.is_listed(item, 0);
    let horizon = config.horizon_days;

    let index: BTreeMap<_, _> = order.iter().enumerate().map(|(i, s)| (&s.id, i)).collect();
    let mut agents: Vec<Agent> = order
        .iter()
        .map(|spec| Agent {
            spec,
            rng: stream(seed, "behavior", &[spec.id.as_str(), item.as_str()]),
            missing: stream(seed, "missing", &[spec.id.as_str(), item.as_str()]),
            price: list,
            pending: BTreeMap::new(),
            followers: Vec::new(),
        })
        .collect();

    for i in 0..agents.len() {
        match &agents[i].spec.behavior {
            StoreBehavior::Independent { .. } => {}
            StoreBehavior::ListResponder {
                lag,
                on_list_discount_pct,
                off_list_markup_pct,
            } => {
                let (disc, markup) = (*on_list_discount_pct, *off_list_markup_pct);
                agents[i].price = responder_price(list, listed_day0, disc, markup);
                for t in calendar.transitions(item) {
                    let when = t + lag.sample(agents[i].rng.random()) as u32;
                    if when < horizon {
                        let p = responder_price(list, calendar.is_listed(item, t), disc, markup);
                        agents[i].pending.entry(when).or_default().push(p);
                    }
                }
            }
            StoreBehavior::Follower {
                target,
                undercut_cents,
                ..
            } => {
                let t = index[target];
                agents[i].price = agents[t].price.saturating_sub(*undercut_cents).max(1);
                agents[t].followers.push(i);
            }
        }
    }

    let mut observations = Vec::with_capacity(agents.len() * horizon as usize);
    let mut dropped = 0u64;
    for day in 0..horizon {
        if day > 0 {
            for i in 0..agents.len() {
                let before = agents[i].price;
                let agent = &mut agents[i];
                if let StoreBehavior::Independent { hazard, magnitude_pct } = &agent.spec.behavior {
                    if agent.rng.random_bool(*hazard) {
                        let pct = agent.rng.random_range(magnitude_pct.min..=magnitude_pct.max);
                        let delta = scaled(list, pct / 100.0);
                        let up = agent.rng.random_bool(0.5);
                        let next = if up { before + delta } else { before.saturating_sub(delta).max(1) };
                        // a cut clamped at the floor becomes a raise
                        agent.price = if next == before { before + delta } else { next };
                    }
                }
                if let Some(prices) = agent.pending.remove(&day) {
                    agent.price = *prices.last().expect("non-empty schedule");
                }
                let now = agents[i].price;
                if now == before {
                    continue;
                }
                for fi in agents[i].followers.clone() {
                    let f = &mut agents[fi];
                    let StoreBehavior::Follower {
                        follow_probability,
                        lag,
                        undercut_cents,
                        ..
                    } = &f.spec.behavior
                    else {
                        unreachable!("only followers subscribe");
                    };
                    if f.rng.random_bool(*follow_probability) {
                        let when = day + lag.sample(f.rng.random()) as u32;
                        if when < horizon {
                            let p = now.saturating_sub(*undercut_cents).max(1);
                            f.pending.entry(when).or_default().push(p);
                        }
                    }
                }
            }
        }
        let date = config.start_date + Days::new(u64::from(day));
        for agent in &mut agents {
            if config.missingness > 0.0 && agent.missing.random_bool(config.missingness) {
                dropped += 1;
                continue;
            }
            observations.push(PriceObservation {
                date,
                store_id: agent.spec.id.clone(),
                item_id: item.clone(),
                price: Cents(agent.price),
            });
        }
    }
    (observations, dropped)
}

/// Generates a panel with planted behaviours.
///
/// Day 0 fixes initial prices: independents and followers start at the
/// item's list price (followers less any undercut), responders at their
/// listed or unlisted price. Dynamics run from day 1. Within a day stores are
/// processed targets-before-followers, so a lag-0 follower matches on the
/// same day. Every store carries every item.
pub fn simulate(config: &SimConfig, seed: u64) -> Result<SimOutput, SimError> {
    config.validate()?;
    let order = config.processing_order()?;
    let calendar = make_bestseller_calendar(config, seed);

    let per_item: Vec<(Vec<PriceObservation>, u64)> = calendar
        .items
        .par_iter()
        .map(|(item, _)| simulate_item(config, &order, &calendar, item, seed))
        .collect();

    let mut dropped = 0;
    let mut observations = Vec::new();
    for (obs, d) in per_item {
        observations.extend(obs);
        dropped += d;
    }
    let panel = PricePanel::from_observations(observations).expect("one price per cell");
    let categories = calendar.categories();
    let truth = GroundTruth {
        seed,
        start_date: config.start_date,
        end_date: config.end_date(),
        stores: config.stores.clone(),
        categories: categories.clone(),
    };
    Ok(SimOutput {
        panel,
        categories,
        calendar,
        truth,
        dropped_observations: dropped,
    })
}

/// Simulates a market with list-driven synchronization and no followers.
pub fn confound_scenario(config: &SimConfig, seed: u64) -> Result<SimOutput, SimError> {
    if let Some(s) = config.stores.iter().find(|s| matches!(s.behavior, StoreBehavior::Follower { .. })) {
        return Err(SimError::invalid(
            format!("stores.{}.kind", s.id),
            "confound scenarios allow only independent and list_responder stores",
        ));
    }
    simulate(config, seed)
}
