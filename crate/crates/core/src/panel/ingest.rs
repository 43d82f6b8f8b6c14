use std::io::Read;

use super::{parse_date, Cents, ItemId, PanelError, PriceObservation, PricePanel, StoreId};

pub const OBSERVATION_HEADER: &str = "date,store_id,item_id,price_cents";

/// Reads an observation CSV stream into a fresh panel.
///
/// Empty input (no bytes, or a header with no rows) yields an empty panel.
pub fn ingest_observations<R: Read>(source: R) -> Result<PricePanel, PanelError> {
    let mut panel = PricePanel::new();
    ingest_into(&mut panel, source)?;
    Ok(panel)
}

/// Reads an observation CSV stream into an existing panel, returning the
/// number of rows read. Duplicate rows with the same price are absorbed.
pub fn ingest_into<R: Read>(panel: &mut PricePanel, source: R) -> Result<usize, PanelError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);

    let mut record = csv::StringRecord::new();
    let mut rows = 0;
    let mut saw_header = false;
    loop {
        let more = reader.read_record(&mut record).map_err(|e| csv_error(&e))?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if !saw_header {
            let found = record.iter().collect::<Vec<_>>().join(",");
            if found != OBSERVATION_HEADER {
                return Err(PanelError::BadHeader {
                    expected: OBSERVATION_HEADER,
                    found,
                });
            }
            saw_header = true;
            continue;
        }
        let obs = parse_row(&record, line)?;
        panel.insert(obs).map_err(|e| match e {
            PanelError::Conflict {
                store,
                item,
                date,
                existing,
                incoming,
                ..
            } => PanelError::Conflict {
                store,
                item,
                date,
                existing,
                incoming,
                line: Some(line),
            },
            other => other,
        })?;
        rows += 1;
    }
    Ok(rows)
}

fn parse_row(record: &csv::StringRecord, line: u64) -> Result<PriceObservation, PanelError> {
    let malformed = |message: String| PanelError::Malformed { line, message };
    if record.len() != 4 {
        return Err(malformed(format!("expected 4 fields, found {}", record.len())));
    }
    let date = parse_date(&record[0])
        .ok_or_else(|| malformed(format!("invalid date {:?}", &record[0])))?;
    let store_id = StoreId::new(&record[1]).map_err(|e| malformed(e.to_string()))?;
    let item_id = ItemId::new(&record[2]).map_err(|e| malformed(e.to_string()))?;
    let raw = &record[3];
    if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(format!(
            "price_cents must be a non-negative integer, found {raw:?}"
        )));
    }
    let price = raw
        .parse::<u64>()
        .map_err(|e| malformed(format!("price_cents {raw:?}: {e}")))?;
    Ok(PriceObservation {
        date,
        store_id,
        item_id,
        price: Cents(price),
    })
}

fn csv_error(e: &csv::Error) -> PanelError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    PanelError::Malformed {
        line,
        message: e.to_string(),
    }
}
