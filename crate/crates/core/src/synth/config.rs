use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::panel::StoreId;

/// Probability weights over response lags 0..=L days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LagDistribution(pub Vec<f64>);

impl LagDistribution {
    pub fn point(lag: usize) -> Self {
        let mut w = vec![0.0; lag + 1];
        w[lag] = 1.0;
        Self(w)
    }

    pub fn max_lag(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn validate(&self, field: &str) -> Result<(), SimError> {
        if self.0.is_empty() {
            return Err(SimError::invalid(field, "lag distribution is empty"));
        }
        if self.0.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(SimError::invalid(field, "lag weights must lie in [0, 1]"));
        }
        let total: f64 = self.0.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SimError::invalid(field, format!("lag weights sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Inverse-CDF draw from a uniform in [0, 1).
    pub(crate) fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (lag, &p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return lag;
            }
        }
        // rounding can leave u just above the running sum
        self.0.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Size of a random price move, as a percentage of the item's list price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudePct {
    pub min: f64,
    pub max: f64,
}

impl Default for MagnitudePct {
    fn default() -> Self {
        Self { min: 2.0, max: 15.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoreBehavior {
    /// Reprices each item on any day with probability `hazard`, up or down
    /// with equal odds.
    Independent {
        hazard: f64,
        #[serde(default)]
        magnitude_pct: MagnitudePct,
    },
    /// Discounts an item after it enters a bestseller list and raises the
    /// price after it leaves, each time after a lag drawn from `lag`.
    ListResponder {
        lag: LagDistribution,
        on_list_discount_pct: f64,
        #[serde(default)]
        off_list_markup_pct: f64,
    },
    /// Copies the target's new price after a lag drawn from `lag`, with
    /// probability `follow_probability` per target change.
    Follower {
        target: StoreId,
        follow_probability: f64,
        lag: LagDistribution,
        /// Cents below the target's price; 0 is exact matching.
        #[serde(default)]
        undercut_cents: u64,
    },
}

impl StoreBehavior {
    pub fn kind(&self) -> &'static str {
        match self {
            StoreBehavior::Independent { .. } => "independent",
            StoreBehavior::ListResponder { .. } => "list_responder",
            StoreBehavior::Follower { .. } => "follower",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreSpec {
    pub id: StoreId,
    #[serde(flatten)]
    pub behavior: StoreBehavior,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemCounts {
    #[serde(default)]
    pub random: u32,
    /// Candidates for the NYT list; those never listed end up as random.
    #[serde(default)]
    pub nyt_bestseller: u32,
    /// Candidates for the computer list; those never listed end up as random.
    #[serde(default)]
    pub computer_bestseller: u32,
}

impl ItemCounts {
    pub fn total(&self) -> u32 {
        self.random + self.nyt_bestseller + self.computer_bestseller
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceRange {
    pub min_cents: u64,
    pub max_cents: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestsellerParams {
    /// Slots per list; 0 disables the lists.
    pub list_size: u32,
    /// Chance that a listed item drops off at each weekly refresh.
    pub weekly_turnover: f64,
}

impl Default for BestsellerParams {
    fn default() -> Self {
        Self {
            list_size: 0,
            weekly_turnover: 0.0,
        }
    }
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(1999, 8, 8).expect("valid date")
}

/// Full simulator configuration. Loaded from TOML; see `docs/sim-config.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
    pub horizon_days: u32,
    #[serde(default)]
    pub missingness: f64,
    pub items: ItemCounts,
    pub list_prices: PriceRange,
    #[serde(default)]
    pub bestseller: BestsellerParams,
    pub stores: Vec<StoreSpec>,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let config: SimConfig =
            toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon_days < 1 {
            return Err(SimError::invalid("horizon_days", "must be at least 1"));
        }
        if self.stores.is_empty() {
            return Err(SimError::invalid("stores", "at least one store is required"));
        }
        if self.items.total() < 1 {
            return Err(SimError::invalid("items", "at least one item is required"));
        }
        if !(0.0..1.0).contains(&self.missingness) {
            return Err(SimError::invalid("missingness", "must lie in [0, 1)"));
        }
        let PriceRange { min_cents, max_cents } = self.list_prices;
        if min_cents < 1 || min_cents > max_cents {
            return Err(SimError::invalid(
                "list_prices",
                "need 1 <= min_cents <= max_cents",
            ));
        }
        if !(0.0..=1.0).contains(&self.bestseller.weekly_turnover) {
            return Err(SimError::invalid("bestseller.weekly_turnover", "must lie in [0, 1]"));
        }

        let mut ids = BTreeSet::new();
        for s in &self.stores {
            if !ids.insert(&s.id) {
                return Err(SimError::invalid(format!("stores.{}", s.id), "duplicate store id"));
            }
        }
        for s in &self.stores {
            let field = |f: &str| format!("stores.{}.{f}", s.id);
            match &s.behavior {
                StoreBehavior::Independent { hazard, magnitude_pct } => {
                    if !(0.0..=1.0).contains(hazard) {
                        return Err(SimError::invalid(field("hazard"), "must lie in [0, 1]"));
                    }
                    let MagnitudePct { min, max } = *magnitude_pct;
                    if !(min >= 0.0 && min <= max && max <= 100.0) {
                        return Err(SimError::invalid(
                            field("magnitude_pct"),
                            "need 0 <= min <= max <= 100",
                        ));
                    }
                }
                StoreBehavior::ListResponder {
                    lag,
                    on_list_discount_pct,
                    off_list_markup_pct,
                } => {
                    lag.validate(&field("lag"))?;
                    if !(0.0..100.0).contains(on_list_discount_pct) {
                        return Err(SimError::invalid(field("on_list_discount_pct"), "must lie in [0, 100)"));
                    }
                    if !(*off_list_markup_pct >= 0.0 && off_list_markup_pct.is_finite()) {
                        return Err(SimError::invalid(field("off_list_markup_pct"), "must be >= 0"));
                    }
                }
                StoreBehavior::Follower {
                    target,
                    follow_probability,
                    lag,
                    ..
                } => {
                    if target == &s.id {
                        return Err(SimError::invalid(field("target"), "a store cannot follow itself"));
                    }
                    if !ids.contains(target) {
                        return Err(SimError::invalid(field("target"), format!("unknown store {target}")));
                    }
                    if !(0.0..=1.0).contains(follow_probability) {
                        return Err(SimError::invalid(field("follow_probability"), "must lie in [0, 1]"));
                    }
                    lag.validate(&field("lag"))?;
                }
            }
        }
        self.processing_order()?;
        Ok(())
    }

    /// Stores ordered so every follower comes after its target.
    pub(crate) fn processing_order(&self) -> Result<Vec<&StoreSpec>, SimError> {
        let by_id: BTreeMap<&StoreId, &StoreSpec> = self.stores.iter().map(|s| (&s.id, s)).collect();
        let mut placed: BTreeSet<&StoreId> = BTreeSet::new();
        let mut order = Vec::with_capacity(self.stores.len());
        while order.len() < self.stores.len() {
            let before = order.len();
            for (id, spec) in &by_id {
                if placed.contains(id) {
                    continue;
                }
                let ready = match &spec.behavior {
                    StoreBehavior::Follower { target, .. } => placed.contains(target),
                    _ => true,
                };
                if ready {
                    placed.insert(id);
                    order.push(*spec);
                }
            }
            if order.len() == before {
                return Err(SimError::invalid("stores", "follower targets form a cycle"));
            }
        }
        Ok(order)
    }

    pub fn has_followers(&self) -> bool {
        self.stores
            .iter()
            .any(|s| matches!(s.behavior, StoreBehavior::Follower { .. }))
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start_date + chrono::Days::new(u64::from(self.horizon_days) - 1)
    }

    /// One leader, one follower copying it a day later with probability 0.9,
    /// and eight independent stores, over 60 random-category items and 120 days.
    pub fn injection_preset() -> Self {
        let sid = |s: &str| StoreId::new(s).expect("valid id");
        let mut stores = vec![
            StoreSpec {
                id: sid("leader"),
                behavior: StoreBehavior::Independent {
                    hazard: 0.05,
                    magnitude_pct: MagnitudePct::default(),
                },
            },
            StoreSpec {
                id: sid("follower"),
                behavior: StoreBehavior::Follower {
                    target: sid("leader"),
                    follow_probability: 0.9,
                    lag: LagDistribution::point(1),
                    undercut_cents: 0,
                },
            },
        ];
        stores.extend((1..=8).map(|i| StoreSpec {
            id: sid(&format!("indep{i:02}")),
            behavior: StoreBehavior::Independent {
                hazard: 0.02,
                magnitude_pct: MagnitudePct::default(),
            },
        }));
        Self {
            start_date: default_start(),
            horizon_days: 120,
            missingness: 0.02,
            items: ItemCounts {
                random: 60,
                ..ItemCounts::default()
            },
            list_prices: PriceRange {
                min_cents: 999,
                max_cents: 4999,
            },
            bestseller: BestsellerParams::default(),
            stores,
        }
    }

    /// Bestseller-list responders plus two independent stores and no
    /// followers: synchronized repricing driven only by list transitions.
    pub fn confound_preset() -> Self {
        let sid = |s: &str| StoreId::new(s).expect("valid id");
        let mut stores: Vec<StoreSpec> = (1..=2)
            .map(|i| StoreSpec {
                id: sid(&format!("indep{i:02}")),
                behavior: StoreBehavior::Independent {
                    hazard: 0.02,
                    magnitude_pct: MagnitudePct::default(),
                },
            })
            .collect();
        stores.extend((1..=7).map(|i| StoreSpec {
            id: sid(&format!("resp{i:02}")),
            behavior: StoreBehavior::ListResponder {
                lag: LagDistribution::point(0),
                on_list_discount_pct: 20.0 + i as f64,
                off_list_markup_pct: 0.0,
            },
        }));
        Self {
            start_date: default_start(),
            horizon_days: 120,
            missingness: 0.0,
            items: ItemCounts {
                random: 40,
                nyt_bestseller: 20,
                computer_bestseller: 20,
            },
            list_prices: PriceRange {
                min_cents: 999,
                max_cents: 4999,
            },
            bestseller: BestsellerParams {
                list_size: 8,
                weekly_turnover: 0.3,
            },
            stores,
        }
    }
}
