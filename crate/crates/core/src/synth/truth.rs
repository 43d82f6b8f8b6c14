use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::config::{LagDistribution, StoreBehavior, StoreSpec};
use super::SimError;
use crate::panel::{CategoryLabel, CategorySet, ItemId, StoreId};

/// What the simulator actually planted.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub seed: u64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub stores: Vec<StoreSpec>,
    pub categories: CategorySet,
}

/// One line of the ground-truth JSON-lines export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum GroundTruthRecord {
    Meta {
        seed: u64,
        start_date: NaiveDate,
        end_date: NaiveDate,
    },
    Store(StoreSpec),
    Follower {
        store_id: StoreId,
        target: StoreId,
        follow_probability: f64,
        lag: LagDistribution,
    },
    Listing {
        item_id: ItemId,
        label: CategoryLabel,
        list_name: String,
        start_date: NaiveDate,
        end_date: NaiveDate,
    },
}

impl GroundTruth {
    /// (follower, target) pairs in config order.
    pub fn followers(&self) -> Vec<(&StoreId, &StoreId)> {
        self.stores
            .iter()
            .filter_map(|s| match &s.behavior {
                StoreBehavior::Follower { target, .. } => Some((&s.id, target)),
                _ => None,
            })
            .collect()
    }

    pub fn records(&self) -> Vec<GroundTruthRecord> {
        let mut out = vec![GroundTruthRecord::Meta {
            seed: self.seed,
            start_date: self.start_date,
            end_date: self.end_date,
        }];
        out.extend(self.stores.iter().cloned().map(GroundTruthRecord::Store));
        for s in &self.stores {
            if let StoreBehavior::Follower {
                target,
                follow_probability,
                lag,
                ..
            } = &s.behavior
            {
                out.push(GroundTruthRecord::Follower {
                    store_id: s.id.clone(),
                    target: target.clone(),
                    follow_probability: *follow_probability,
                    lag: lag.clone(),
                });
            }
        }
        for cat in self.categories.iter() {
            for iv in &cat.intervals {
                out.push(GroundTruthRecord::Listing {
                    item_id: cat.item_id.clone(),
                    label: cat.label,
                    list_name: iv.list_name.clone(),
                    start_date: iv.start,
                    end_date: iv.end,
                });
            }
        }
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for rec in self.records() {
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Parses an export back into records. Listing records carry only the
    /// listed items, so the full category set is not reconstructed here.
    pub fn read_records<R: BufRead>(source: R) -> Result<Vec<GroundTruthRecord>, SimError> {
        let mut out = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line.map_err(|e| SimError::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line)
                .map_err(|e| SimError::Parse(format!("line {}: {e}", i + 1)))?;
            out.push(rec);
        }
        Ok(out)
    }
}
