use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{parse_date, ChangeLog, ItemId, DATE_FORMAT};

/// Analysis category of an item.
///
/// An item that has ever been on a bestseller list keeps that label for its
/// whole history, including after it drops off the list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryLabel {
    Random,
    NytBestseller,
    ComputerBestseller,
}

impl CategoryLabel {
    pub const ALL: [CategoryLabel; 3] = [
        CategoryLabel::Random,
        CategoryLabel::NytBestseller,
        CategoryLabel::ComputerBestseller,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoryLabel::Random => "random",
            CategoryLabel::NytBestseller => "nyt_bestseller",
            CategoryLabel::ComputerBestseller => "computer_bestseller",
        }
    }

    pub fn is_bestseller(self) -> bool {
        self != CategoryLabel::Random
    }
}

impl fmt::Display for CategoryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CategoryLabel {
    type Err = CategoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| CategoryError::UnknownLabel(s.to_string()))
    }
}

/// One stretch of membership on a named bestseller list, inclusive on both ends.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ListInterval {
    pub list_name: String,
    #[serde(rename = "start_date")]
    pub start: NaiveDate,
    #[serde(rename = "end_date")]
    pub end: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListingStatus {
    Never,
    NotYetListed,
    Listed,
    Former,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub item_id: ItemId,
    pub label: CategoryLabel,
    #[serde(default)]
    pub intervals: Vec<ListInterval>,
}

#[derive(Debug, Error)]
pub enum CategoryError {
    #[error("unknown category label {0:?}")]
    UnknownLabel(String),
    #[error("item {item}: interval on {list} ends ({end}) before it starts ({start})")]
    InvertedInterval {
        item: ItemId,
        list: String,
        start: NaiveDate,
        end: NaiveDate,
    },
    #[error("item {item}: overlapping intervals on list {list}")]
    OverlappingIntervals { item: ItemId, list: String },
    #[error("item {item} has two labels: {first} and {second}")]
    ConflictingLabels {
        item: ItemId,
        first: CategoryLabel,
        second: CategoryLabel,
    },
    #[error("item {0} has no category")]
    MissingCategory(ItemId),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Category {
    pub fn new(
        item_id: ItemId,
        label: CategoryLabel,
        mut intervals: Vec<ListInterval>,
    ) -> Result<Self, CategoryError> {
        intervals.sort();
        for iv in &intervals {
            if iv.start > iv.end {
                return Err(CategoryError::InvertedInterval {
                    item: item_id,
                    list: iv.list_name.clone(),
                    start: iv.start,
                    end: iv.end,
                });
            }
        }
        // sorted by (list_name, start): overlaps can only be between neighbours
        for pair in intervals.windows(2) {
            if pair[0].list_name == pair[1].list_name && pair[1].start <= pair[0].end {
                return Err(CategoryError::OverlappingIntervals {
                    item: item_id,
                    list: pair[0].list_name.clone(),
                });
            }
        }
        Ok(Self {
            item_id,
            label,
            intervals,
        })
    }

    pub fn random(item_id: ItemId) -> Self {
        Self {
            item_id,
            label: CategoryLabel::Random,
            intervals: Vec::new(),
        }
    }

    pub fn status_at(&self, date: NaiveDate) -> ListingStatus {
        if self.intervals.is_empty() {
            return ListingStatus::Never;
        }
        if self.intervals.iter().any(|iv| iv.start <= date && date <= iv.end) {
            ListingStatus::Listed
        } else if self.intervals.iter().any(|iv| iv.end < date) {
            ListingStatus::Former
        } else {
            ListingStatus::NotYetListed
        }
    }
}

/// Category records keyed by item.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategorySet {
    by_item: BTreeMap<ItemId, Category>,
}

impl CategorySet {
    /// Repeated records for one item are merged when the labels agree and
    /// rejected when they do not.
    pub fn from_records(records: impl IntoIterator<Item = Category>) -> Result<Self, CategoryError> {
        let mut by_item: BTreeMap<ItemId, Category> = BTreeMap::new();
        for rec in records {
            match by_item.get_mut(&rec.item_id) {
                None => {
                    by_item.insert(rec.item_id.clone(), rec);
                }
                Some(existing) if existing.label != rec.label => {
                    return Err(CategoryError::ConflictingLabels {
                        item: rec.item_id,
                        first: existing.label,
                        second: rec.label,
                    });
                }
                Some(existing) => {
                    let mut intervals = std::mem::take(&mut existing.intervals);
                    intervals.extend(rec.intervals);
                    *existing = Category::new(rec.item_id, rec.label, intervals)?;
                }
            }
        }
        Ok(Self { by_item })
    }

    pub fn get(&self, item: &ItemId) -> Option<&Category> {
        self.by_item.get(item)
    }

    pub fn label_of(&self, item: &ItemId) -> Option<CategoryLabel> {
        self.by_item.get(item).map(|c| c.label)
    }

    pub fn len(&self) -> usize {
        self.by_item.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_item.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Category> + '_ {
        self.by_item.values()
    }

    /// Reads the category CSV format: a header beginning `item_id,label`,
    /// then rows of `item_id,label` followed by zero or more
    /// `list_name,start_date,end_date` triples.
    pub fn read_csv<R: Read>(source: R) -> Result<Self, CategoryError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(source);
        let mut records = Vec::new();
        let mut record = csv::StringRecord::new();
        let mut saw_header = false;
        loop {
            let more = reader.read_record(&mut record).map_err(|e| CategoryError::Malformed {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            if !more {
                break;
            }
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let malformed = |message: String| CategoryError::Malformed { line, message };
            if !saw_header {
                if record.get(0) != Some("item_id") || record.get(1) != Some("label") {
                    return Err(malformed(format!(
                        "expected header starting with item_id,label, found {:?}",
                        record.iter().collect::<Vec<_>>().join(",")
                    )));
                }
                saw_header = true;
                continue;
            }
            if record.len() < 2 || (record.len() - 2) % 3 != 0 {
                return Err(malformed(format!(
                    "expected item_id,label plus interval triples, found {} fields",
                    record.len()
                )));
            }
            let item = ItemId::new(&record[0]).map_err(|e| malformed(e.to_string()))?;
            let label: CategoryLabel = record[1].parse().map_err(|e: CategoryError| malformed(e.to_string()))?;
            let mut intervals = Vec::new();
            for chunk in record.iter().skip(2).collect::<Vec<_>>().chunks(3) {
                let start = parse_date(chunk[1])
                    .ok_or_else(|| malformed(format!("invalid start_date {:?}", chunk[1])))?;
                let end = parse_date(chunk[2])
                    .ok_or_else(|| malformed(format!("invalid end_date {:?}", chunk[2])))?;
                if chunk[0].is_empty() {
                    return Err(malformed("empty list_name".into()));
                }
                intervals.push(ListInterval {
                    list_name: chunk[0].to_string(),
                    start,
                    end,
                });
            }
            records.push(Category::new(item, label, intervals)?);
        }
        Self::from_records(records)
    }

    /// Reads one JSON category record per non-blank line.
    pub fn read_jsonl<R: BufRead>(source: R) -> Result<Self, CategoryError> {
        let mut records = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Category = serde_json::from_str(&line).map_err(|e| CategoryError::Malformed {
                line: idx as u64 + 1,
                message: e.to_string(),
            })?;
            records.push(Category::new(rec.item_id, rec.label, rec.intervals)?);
        }
        Self::from_records(records)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "item_id,label,list_name,start_date,end_date")?;
        for c in self.iter() {
            write!(w, "{},{}", c.item_id, c.label)?;
            for iv in &c.intervals {
                write!(
                    w,
                    ",{},{},{}",
                    iv.list_name,
                    iv.start.format(DATE_FORMAT),
                    iv.end.format(DATE_FORMAT)
                )?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for c in self.iter() {
            serde_json::to_writer(&mut w, c)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Changes partitioned by item category; every label is present, possibly empty.
pub type Strata = BTreeMap<CategoryLabel, ChangeLog>;

/// Partitions a change log by the category of each change's item.
pub fn stratify(changelog: &ChangeLog, categories: &CategorySet) -> Result<Strata, CategoryError> {
    let mut buckets: BTreeMap<CategoryLabel, Vec<_>> =
        CategoryLabel::ALL.iter().map(|&l| (l, Vec::new())).collect();
    for (item, changes) in changelog.groups() {
        let label = categories
            .label_of(item)
            .ok_or_else(|| CategoryError::MissingCategory(item.clone()))?;
        buckets
            .get_mut(&label)
            .expect("all labels seeded")
            .extend(changes.iter().cloned());
    }
    Ok(buckets
        .into_iter()
        .map(|(l, changes)| (l, ChangeLog::from_changes(changes)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{extract_changes, Cents, PriceObservation, PricePanel, StoreId};

    const A: &str = "9780000000002";
    const B: &str = "9780000000019";

    fn d(m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2000, m, day).unwrap()
    }

    fn item(s: &str) -> ItemId {
        ItemId::new(s).unwrap()
    }

    fn changes(rows: &[(NaiveDate, &str, u64)]) -> ChangeLog {
        let panel = PricePanel::from_observations(rows.iter().map(|&(date, i, p)| PriceObservation {
            date,
            store_id: StoreId::new("s").unwrap(),
            item_id: item(i),
            price: Cents(p),
        }))
        .unwrap();
        extract_changes(&panel)
    }

    #[test]
    fn partition_by_label() {
        let log = changes(&[(d(1, 1), A, 1), (d(1, 2), A, 2), (d(1, 1), B, 1), (d(1, 2), B, 3)]);
        let cats = CategorySet::from_records([
            Category::random(item(A)),
            Category::new(item(B), CategoryLabel::NytBestseller, vec![]).unwrap(),
        ])
        .unwrap();
        let s = stratify(&log, &cats).unwrap();
        assert_eq!(s[&CategoryLabel::Random].len(), 1);
        assert_eq!(s[&CategoryLabel::NytBestseller].len(), 1);
        assert!(s[&CategoryLabel::ComputerBestseller].is_empty());
        assert_eq!(s.values().map(ChangeLog::len).sum::<usize>(), log.len());
    }

    #[test]
    fn changes_after_leaving_list_stay_in_bestseller_stratum() {
        let listing = ListInterval {
            list_name: "nyt".into(),
            start: d(1, 1),
            end: d(1, 31),
        };
        let cat = Category::new(item(A), CategoryLabel::NytBestseller, vec![listing]).unwrap();
        assert_eq!(cat.status_at(d(3, 1)), ListingStatus::Former);
        let log = changes(&[(d(3, 1), A, 1), (d(3, 2), A, 2)]);
        let s = stratify(&log, &CategorySet::from_records([cat]).unwrap()).unwrap();
        assert_eq!(s[&CategoryLabel::NytBestseller].len(), 1);
    }

    #[test]
    fn empty_log_gives_empty_groups() {
        let s = stratify(&ChangeLog::default(), &CategorySet::default()).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.values().all(ChangeLog::is_empty));
    }

    #[test]
    fn missing_and_conflicting_categories() {
        let log = changes(&[(d(1, 1), A, 1), (d(1, 2), A, 2)]);
        let err = stratify(&log, &CategorySet::default()).unwrap_err();
        assert!(matches!(err, CategoryError::MissingCategory(ref i) if i.as_str() == A));

        let err = CategorySet::from_records([
            Category::random(item(A)),
            Category::new(item(A), CategoryLabel::ComputerBestseller, vec![]).unwrap(),
        ])
        .unwrap_err();
        assert!(matches!(err, CategoryError::ConflictingLabels { .. }));
    }

    #[test]
    fn interval_validation() {
        let iv = |s, e| ListInterval {
            list_name: "nyt".into(),
            start: s,
            end: e,
        };
        assert!(matches!(
            Category::new(item(A), CategoryLabel::NytBestseller, vec![iv(d(2, 1), d(1, 1))]),
            Err(CategoryError::InvertedInterval { .. })
        ));
        assert!(matches!(
            Category::new(
                item(A),
                CategoryLabel::NytBestseller,
                vec![iv(d(1, 1), d(1, 10)), iv(d(1, 10), d(1, 20))]
            ),
            Err(CategoryError::OverlappingIntervals { .. })
        ));
        // same dates on different lists are fine
        let other = ListInterval {
            list_name: "computer".into(),
            start: d(1, 1),
            end: d(1, 10),
        };
        assert!(Category::new(item(A), CategoryLabel::NytBestseller, vec![iv(d(1, 1), d(1, 10)), other]).is_ok());
    }

    #[test]
    fn csv_and_jsonl_agree() {
        let csv = "item_id,label,list_name,start_date,end_date\n\
                   9780000000002,random\n\
                   9780000000019,nyt_bestseller,nyt,2000-01-01,2000-01-14,nyt,2000-02-01,2000-02-07\n";
        let from_csv = CategorySet::read_csv(csv.as_bytes()).unwrap();
        let mut jsonl = Vec::new();
        from_csv.write_jsonl(&mut jsonl).unwrap();
        let from_jsonl = CategorySet::read_jsonl(&jsonl[..]).unwrap();
        assert_eq!(from_csv, from_jsonl);
        let mut back = Vec::new();
        from_jsonl.write_csv(&mut back).unwrap();
        assert_eq!(String::from_utf8(back).unwrap(), csv);
        assert_eq!(
            String::from_utf8(jsonl).unwrap().lines().nth(1).unwrap(),
            r#"{"item_id":"9780000000019","label":"nyt_bestseller","intervals":[{"list_name":"nyt","start_date":"2000-01-01","end_date":"2000-01-14"},{"list_name":"nyt","start_date":"2000-02-01","end_date":"2000-02-07"}]}"#
        );
    }

    #[test]
    fn malformed_category_rows() {
        let bad = "item_id,label\n9780000000002,random,nyt\n";
        assert!(matches!(CategorySet::read_csv(bad.as_bytes()), Err(CategoryError::Malformed { line: 2, .. })));
        let bad = "item_id,label\n9780000000002,bestseller\n";
        assert!(matches!(CategorySet::read_csv(bad.as_bytes()), Err(CategoryError::Malformed { line: 2, .. })));
    }
}
