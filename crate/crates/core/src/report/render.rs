use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::{ReportBundle, Section};
use crate::clusters::{StoreBucket, Window};
use crate::leadership::{leader_ratio, InitiatorStats, LagTable, RatioValue};
use crate::panel::{CategoryLabel, StoreId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(format!("unknown format {other:?} (expected csv or markdown)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("{table}: totals row disagrees with column sums in column {column}")]
    TotalsMismatch { table: String, column: String },
    #[error("{table}: changes up + down != total in bucket {bucket}")]
    DirectionSplit { table: String, bucket: String },
    #[error("{table}: invalid cell for store {store}")]
    InvalidCell { table: String, store: String },
}

/// Rendered files keyed by file name, in name order.
pub type Rendered = BTreeMap<String, Vec<u8>>;

struct Doc {
    title: String,
    headers: Vec<String>,
    /// Markdown-only header labels; CSV uses `headers`.
    display: Vec<String>,
    rows: Vec<Vec<String>>,
    /// Markdown-only bold last row.
    total_row: Option<Vec<String>>,
    /// Markdown-only: data cells from this column on get a percent sign.
    percent_from: Option<usize>,
}

impl Doc {
    fn new(title: impl Into<String>, columns: &[(&str, &str)]) -> Self {
        Self {
            title: title.into(),
            headers: columns.iter().map(|c| c.0.to_string()).collect(),
            display: columns.iter().map(|c| c.1.to_string()).collect(),
            rows: Vec::new(),
            total_row: None,
            percent_from: None,
        }
    }

    fn to_bytes(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
                w.write_record(&self.headers).expect("in-memory write");
                for row in self.rows.iter().chain(&self.total_row) {
                    w.write_record(row).expect("in-memory write");
                }
                w.into_inner().expect("in-memory flush")
            }
            Format::Markdown => {
                let esc = |s: &str| s.replace('|', "\\|");
                let mut out = String::new();
                let _ = writeln!(out, "## {}\n", self.title);
                let _ = writeln!(out, "| {} |", self.display.iter().map(|h| esc(h)).collect::<Vec<_>>().join(" | "));
                let rule: Vec<&str> = (0..self.display.len()).map(|i| if i == 0 { "---" } else { "---:" }).collect();
                let _ = writeln!(out, "| {} |", rule.join(" | "));
                for row in &self.rows {
                    let cells: Vec<String> = row
                        .iter()
                        .enumerate()
                        .map(|(i, c)| match self.percent_from {
                            Some(from) if i >= from => format!("{}%", esc(c)),
                            _ => esc(c),
                        })
                        .collect();
                    let _ = writeln!(out, "| {} |", cells.join(" | "));
                }
                if let Some(total) = &self.total_row {
                    let cells: Vec<String> = total.iter().map(|c| format!("**{}**", esc(c))).collect();
                    let _ = writeln!(out, "| {} |", cells.join(" | "));
                }
                out.into_bytes()
            }
        }
    }
}

fn category_slug(c: Option<CategoryLabel>) -> &'static str {
    c.map_or("all", CategoryLabel::as_str)
}

fn category_title(c: Option<CategoryLabel>) -> &'static str {
    match c {
        None => "All items",
        Some(CategoryLabel::Random) => "Random items",
        Some(CategoryLabel::NytBestseller) => "NYT bestsellers",
        Some(CategoryLabel::ComputerBestseller) => "Computer bestsellers",
    }
}

fn category_column(c: CategoryLabel) -> &'static str {
    match c {
        CategoryLabel::Random => "Random",
        CategoryLabel::NytBestseller => "NYT",
        CategoryLabel::ComputerBestseller => "Computer",
    }
}

fn window_slug(w: Window) -> String {
    format!("{}day", w.days())
}

fn three_dp(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

/// Whole percent, rounded half up, from exact counts.
fn percent(num: u64, den: u64) -> u64 {
    if den == 0 {
        0
    } else {
        (200 * num + den) / (2 * den)
    }
}

fn table1(bundle: &ReportBundle) -> Result<Option<Doc>, RenderError> {
    let Section::Present(t) = &bundle.change_counts else {
        return Ok(None);
    };
    let name = "table1_all_all";
    if let Some(bad) = t.totals_mismatch() {
        return Err(RenderError::TotalsMismatch {
            table: name.into(),
            column: bad.as_str().into(),
        });
    }
    let mut cols = vec![("store_id", "Store")];
    cols.extend(t.categories.iter().map(|&c| (c.as_str(), category_column(c))));
    let mut doc = Doc::new("Total price changes by store", &cols);
    for store in t.rows.keys() {
        let mut row = vec![store.to_string()];
        row.extend(t.categories.iter().map(|&c| t.count(store, c).to_string()));
        doc.rows.push(row);
    }
    if !doc.rows.is_empty() {
        let mut total = vec!["Total".to_string()];
        total.extend(t.categories.iter().map(|c| t.totals[c].to_string()));
        doc.total_row = Some(total);
    }
    Ok(Some(doc))
}

fn table2(bundle: &ReportBundle) -> Option<Doc> {
    let stats = bundle.cluster_stats.present()?;
    let mut doc = Doc::new(
        "Single-item price change clusters",
        &[
            ("window_days", "Window (days)"),
            ("total_clusters", "Total number of clusters"),
            ("avg_length_days", "Avg. length of clusters (days)"),
            ("avg_changes_per_cluster", "Avg. number of price changes per cluster"),
        ],
    );
    for ws in stats {
        doc.rows.push(vec![
            ws.window.days().to_string(),
            ws.stats.total_clusters.to_string(),
            three_dp(ws.stats.avg_length_days()),
            three_dp(ws.stats.avg_changes_per_cluster()),
        ]);
    }
    Some(doc)
}

fn table3(bundle: &ReportBundle) -> Result<Vec<(String, Doc)>, RenderError> {
    let Some(entries) = bundle.histograms.present() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for e in entries {
        let name = format!("table3_{}_{}", category_slug(e.category), window_slug(e.window));
        if let Some(bucket) = e.histogram.split_mismatch() {
            return Err(RenderError::DirectionSplit {
                table: name,
                bucket: bucket.label().into(),
            });
        }
        let mut doc = Doc::new(
            format!(
                "Number of stores in {}-day price clusters: {}",
                e.window.days(),
                category_title(e.category)
            ),
            &[
                ("stores", "Number of stores in cluster"),
                ("total_changes", "Total changes"),
                ("changes_up", "Changes up"),
                ("changes_down", "Changes down"),
            ],
        );
        for bucket in StoreBucket::ALL {
            let c = e.histogram.bucket(bucket);
            doc.rows.push(vec![
                bucket.label().to_string(),
                c.total.to_string(),
                c.up.to_string(),
                c.down.to_string(),
            ]);
        }
        out.push((name, doc));
    }
    Ok(out)
}

fn table4(bundle: &ReportBundle) -> Option<Doc> {
    let stats = bundle.initiators.present()?;
    let by_key: BTreeMap<(&StoreId, Window), &InitiatorStats> =
        stats.iter().map(|s| ((&s.store_id, s.window), s)).collect();
    let mut stores: BTreeSet<&StoreId> = bundle.stores.iter().collect();
    stores.extend(stats.iter().map(|s| &s.store_id));

    let mut headers: Vec<(String, String)> = vec![("store_id".into(), "Store".into())];
    for (key, label) in [("single", "Single"), ("first_of_multiple", "1st of multiple"), ("ratio", "Ratio")] {
        for w in &bundle.windows {
            headers.push((format!("{key}_{}", window_slug(*w)), format!("{label} ({}-day)", w.days())));
        }
    }
    let cols: Vec<(&str, &str)> = headers.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let mut doc = Doc::new("Distribution of stores that initiate price changes", &cols);
    for store in stores {
        let get = |w: &Window| {
            by_key.get(&(store, *w)).map(|s| (*s).clone()).unwrap_or(InitiatorStats {
                store_id: store.clone(),
                window: *w,
                single_count: 0,
                first_of_multiple_count: 0,
            })
        };
        let all: Vec<InitiatorStats> = bundle.windows.iter().map(get).collect();
        let mut row = vec![store.to_string()];
        row.extend(all.iter().map(|s| s.single_count.to_string()));
        row.extend(all.iter().map(|s| s.first_of_multiple_count.to_string()));
        row.extend(all.iter().map(|s| match leader_ratio(s).ratio {
            RatioValue::Ratio(r) => format!("{r:.3}"),
            RatioValue::NoEvidence => "n/a".to_string(),
        }));
        doc.rows.push(row);
    }
    Some(doc)
}

fn table5(name: &str, table: &LagTable) -> Result<(Doc, Doc), RenderError> {
    let days: Vec<i32> = table.days().collect();
    let day_cols: Vec<String> = days.iter().map(i32::to_string).collect();
    let mut cols: Vec<(&str, &str)> = vec![("store_id", "Store")];
    cols.extend(day_cols.iter().map(|d| (d.as_str(), d.as_str())));
    let mut pct = Doc::new(
        format!(
            "Share of {}'s changed items re-priced by each store, by day relative to {}: {}",
            table.focal,
            table.focal,
            category_title(table.category)
        ),
        &cols,
    );
    pct.percent_from = Some(1);
    let mut counts = Doc::new(
        format!("Raw counts behind {name}"),
        &[
            ("store_id", "Store"),
            ("day", "Day"),
            ("numerator", "Changed"),
            ("denominator", "Carried"),
        ],
    );
    for (store, cells) in &table.rows {
        if cells.len() != days.len() || cells.iter().any(|c| c.numerator > c.denominator) {
            return Err(RenderError::InvalidCell {
                table: name.into(),
                store: store.to_string(),
            });
        }
        let mut row = vec![store.to_string()];
        for (d, c) in days.iter().zip(cells) {
            row.push(percent(c.numerator, c.denominator).to_string());
            counts.rows.push(vec![
                store.to_string(),
                d.to_string(),
                c.numerator.to_string(),
                c.denominator.to_string(),
            ]);
        }
        pct.rows.push(row);
    }
    Ok((pct, counts))
}

fn metadata(bundle: &ReportBundle) -> Doc {
    let m = &bundle.metadata;
    let mut doc = Doc::new("Report metadata", &[("key", "Key"), ("value", "Value")]);
    let mut put = |k: &str, v: String| doc.rows.push(vec![k.to_string(), v]);
    put("toolkit_version", m.toolkit_version.clone());
    put("panel_digest", m.panel_digest.clone());
    let (start, end) = m
        .date_range
        .map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
    put("date_start", start);
    put("date_end", end);
    put("focal_store", m.focal_store.as_ref().map(StoreId::to_string).unwrap_or_default());
    put("lag_radius", m.lag_radius.to_string());
    put(
        "windows",
        bundle.windows.iter().map(|w| w.days().to_string()).collect::<Vec<_>>().join(" "),
    );
    let absent = |s: &Section<_>| match s {
        Section::Absent(reason) => Some(reason.clone()),
        Section::Present(_) => None,
    };
    let sections = [
        ("table1", absent(&bundle.change_counts.as_ref_unit())),
        ("table2", absent(&bundle.cluster_stats.as_ref_unit())),
        ("table3", absent(&bundle.histograms.as_ref_unit())),
        ("table4", absent(&bundle.initiators.as_ref_unit())),
        ("table5", absent(&bundle.lag_tables.as_ref_unit())),
    ];
    for (table, reason) in sections {
        if let Some(reason) = reason {
            put(&format!("absent.{table}"), reason);
        }
    }
    if let Section::Present(lags) = &bundle.lag_tables {
        for lag in lags {
            if let Section::Absent(reason) = &lag.table {
                put(&format!("absent.table5_{}_all", category_slug(lag.category)), reason.clone());
            }
        }
    }
    doc
}

impl<T> Section<T> {
    fn as_ref_unit(&self) -> Section<()> {
        match self {
            Section::Present(_) => Section::Present(()),
            Section::Absent(r) => Section::Absent(r.clone()),
        }
    }
}

/// Renders every present table, verifying totals first. File names follow
/// `table{N}_{category}_{window}.{ext}`, with `all` where a table spans
/// every category or window; lag tables also get a `_counts` companion with
/// the exact numerators and denominators.
pub fn render(bundle: &ReportBundle, format: Format) -> Result<Rendered, RenderError> {
    let ext = format.extension();
    let mut docs: Vec<(String, Doc)> = Vec::new();
    if let Some(d) = table1(bundle)? {
        docs.push(("table1_all_all".into(), d));
    }
    if let Some(d) = table2(bundle) {
        docs.push(("table2_all_all".into(), d));
    }
    docs.extend(table3(bundle)?);
    if let Some(d) = table4(bundle) {
        docs.push(("table4_all_all".into(), d));
    }
    if let Section::Present(lags) = &bundle.lag_tables {
        for lag in lags {
            if let Section::Present(t) = &lag.table {
                let name = format!("table5_{}_all", category_slug(lag.category));
                let (pct, counts) = table5(&name, t)?;
                docs.push((format!("{name}_counts"), counts));
                docs.push((name, pct));
            }
        }
    }
    docs.push(("report_metadata".into(), metadata(bundle)));
    Ok(docs
        .into_iter()
        .map(|(name, doc)| (format!("{name}.{ext}"), doc.to_bytes(format)))
        .collect())
}

/// Reads a rendered lag-table CSV back into fractions per store, in day order.
pub fn parse_lag_csv(bytes: &[u8]) -> Result<BTreeMap<StoreId, Vec<f64>>, String> {
    let mut reader = csv::Reader::from_reader(bytes);
    let mut out = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let store = StoreId::new(&rec[0]).map_err(|e| e.to_string())?;
        let fractions = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map(|p| p / 100.0).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        out.insert(store, fractions);
    }
    Ok(out)
}
