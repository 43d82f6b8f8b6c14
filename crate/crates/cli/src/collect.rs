//! Snapshot collection: fetch each configured source once, parse it into
//! observations, and append one log segment per source.

use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use chrono::{NaiveDate, Utc};
use lagscope::panel::{ingest_observations, Cents, ItemId, PriceObservation, PricePanel, StoreId};
use serde::Deserialize;

use crate::config::{SourceDef, SourceLocation};
use crate::log::{ObservationLog, SegmentRecord};

pub const PARSERS: [&str; 2] = ["observations_csv", "price_list_json"];

#[derive(Debug, Deserialize)]
struct PriceEntry {
    item_id: ItemId,
    price_cents: u64,
}

/// One store's prices on one day.
#[derive(Debug, Deserialize)]
struct PriceList {
    date: NaiveDate,
    store_id: StoreId,
    prices: Vec<PriceEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PriceListDoc {
    One(PriceList),
    Many(Vec<PriceList>),
}

fn excerpt(payload: &[u8]) -> String {
    let text = String::from_utf8_lossy(payload);
    let cut: String = text.chars().take(120).collect();
    format!("{cut:?}{}", if text.chars().count() > 120 { "..." } else { "" })
}

fn parse_price_lists(payload: &[u8]) -> Result<PricePanel> {
    let doc: PriceListDoc = serde_json::from_slice(payload)?;
    let lists = match doc {
        PriceListDoc::One(l) => vec![l],
        PriceListDoc::Many(v) => v,
    };
    let obs = lists.into_iter().flat_map(|l| {
        let (date, store) = (l.date, l.store_id);
        l.prices.into_iter().map(move |p| PriceObservation {
            date,
            store_id: store.clone(),
            item_id: p.item_id,
            price: Cents(p.price_cents),
        })
    });
    Ok(PricePanel::from_observations(obs)?)
}

/// Parses a payload with a registered parser.
pub fn parse_payload(parser: &str, payload: &[u8]) -> Result<PricePanel> {
    let parsed = match parser {
        "observations_csv" => ingest_observations(payload).map_err(anyhow::Error::from),
        "price_list_json" => parse_price_lists(payload),
        other => bail!("no parser registered as {other:?} (known: {})", PARSERS.join(", ")),
    };
    parsed.map_err(|e| anyhow!("{parser} failed: {e}; payload starts {}", excerpt(payload)))
}

fn fetch(source: &SourceDef) -> Result<Vec<(String, Vec<u8>)>> {
    match &source.location {
        SourceLocation::FileGlob { pattern } => {
            let mut paths: Vec<_> = glob::glob(pattern)
                .with_context(|| format!("bad glob pattern {pattern:?}"))?
                .collect::<Result<_, _>>()?;
            paths.sort();
            paths
                .into_iter()
                .map(|p| {
                    let bytes = std::fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
                    Ok((p.display().to_string(), bytes))
                })
                .collect()
        }
        SourceLocation::Http { url } => {
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(30)))
                .build()
                .into();
            let mut resp = agent.get(url).call().with_context(|| format!("fetching {url}"))?;
            let bytes = resp
                .body_mut()
                .with_config()
                .limit(256 * 1024 * 1024)
                .read_to_vec()
                .with_context(|| format!("reading body of {url}"))?;
            Ok(vec![(url.clone(), bytes)])
        }
    }
}

fn collect_one(source: &SourceDef) -> Result<Option<PricePanel>> {
    let payloads = fetch(source)?;
    if payloads.is_empty() {
        return Ok(None);
    }
    let mut panel = PricePanel::new();
    for (origin, bytes) in payloads {
        let part = parse_payload(&source.parser, &bytes).with_context(|| format!("parsing {origin}"))?;
        panel.merge(&part).with_context(|| format!("merging {origin}"))?;
    }
    Ok(Some(panel))
}

#[derive(Debug, Default)]
pub struct CollectReport {
    pub appended: Vec<SegmentRecord>,
    pub empty: Vec<String>,
    pub failed: Vec<(String, String)>,
}

/// Checks every source names a registered parser before anything is fetched.
pub fn check_sources(sources: &[SourceDef]) -> Result<()> {
    for s in sources {
        if !PARSERS.contains(&s.parser.as_str()) {
            bail!(
                "source {}: no parser registered as {:?} (known: {})",
                s.name,
                s.parser,
                PARSERS.join(", ")
            );
        }
    }
    Ok(())
}

/// Collects every source once. A failing source is logged and skipped; the
/// others still land in the log.
pub fn collect(log: &mut ObservationLog, sources: &[SourceDef]) -> Result<CollectReport> {
    check_sources(sources)?;
    let mut report = CollectReport::default();
    for source in sources {
        match collect_one(source) {
            Ok(Some(panel)) => {
                let rec = log.append(&source.name, Utc::now(), &panel)?;
                log::info!("{}: appended {} observations as {}", source.name, rec.observations, rec.file);
                report.appended.push(rec);
            }
            Ok(None) => {
                log::warn!("{}: nothing to collect", source.name);
                report.empty.push(source.name.clone());
            }
            Err(e) => {
                log::error!("{}: {e:#}", source.name);
                report.failed.push((source.name.clone(), format!("{e:#}")));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn price_list_json_single_and_many() {
        let one = br#"{"date":"2000-01-03","store_id":"amazon","prices":[{"item_id":"9780000000019","price_cents":1299}]}"#;
        let p = parse_payload("price_list_json", one).unwrap();
        assert_eq!(p.len(), 1);
        let many = br#"[{"date":"2000-01-03","store_id":"a","prices":[{"item_id":"9780000000019","price_cents":1}]},
                        {"date":"2000-01-04","store_id":"a","prices":[{"item_id":"9780000000019","price_cents":2}]}]"#;
        assert_eq!(parse_payload("price_list_json", many).unwrap().len(), 2);
    }

    #[test]
    fn parser_failure_quotes_payload() {
        let err = parse_payload("price_list_json", b"<html>busy</html>").unwrap_err().to_string();
        assert!(err.contains("<html>busy"), "{err}");
        let err = parse_payload("nope", b"").unwrap_err().to_string();
        assert!(err.contains("no parser"), "{err}");
    }
}
