//! Append-only observation log.
//!
//! Layout under the log directory:
//!
//! ```text
//! index.jsonl            one JSON record per segment, in append order
//! segments/000001.csv    canonical observation CSV, never rewritten
//! .lock                  advisory lock held by the writing process
//! ```
//!
//! Each index record carries the SHA-256 of its segment and of the previous
//! index line, so any edit to history is caught on replay.

use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use lagscope::panel::{ingest_observations, PricePanel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const INDEX: &str = "index.jsonl";
const SEGMENTS: &str = "segments";
const GENESIS: &str = "genesis";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub seq: u64,
    pub file: String,
    pub source: String,
    pub captured_at: DateTime<Utc>,
    pub observations: usize,
    pub sha256: String,
    /// SHA-256 of the previous index line, or "genesis".
    pub prev: String,
}

pub struct ObservationLog {
    dir: PathBuf,
    // held for the lifetime of the handle; released on drop
    _lock: File,
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ObservationLog {
    /// Opens (creating if needed) and locks a log directory. A log held by
    /// another process is an error, not a wait.
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join(SEGMENTS))
            .with_context(|| format!("creating log directory {}", dir.display()))?;
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(dir.join(".lock"))
            .with_context(|| format!("opening lock file in {}", dir.display()))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => {
                bail!("observation log {} is locked by another process", dir.display())
            }
            Err(TryLockError::Error(e)) => return Err(e).context("locking observation log"),
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            _lock: lock,
        })
    }

    fn index_lines(&self) -> Result<Vec<String>> {
        let path = self.dir.join(INDEX);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let file = File::open(&path).with_context(|| format!("reading {}", path.display()))?;
        BufReader::new(file)
            .lines()
            .map(|l| l.context("reading log index"))
            .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
            .collect()
    }

    /// Index records, checked against the hash chain and segment contents.
    pub fn segments(&self) -> Result<Vec<SegmentRecord>> {
        let mut prev = GENESIS.to_string();
        let mut out = Vec::new();
        for (i, line) in self.index_lines()?.iter().enumerate() {
            let rec: SegmentRecord = serde_json::from_str(line)
                .with_context(|| format!("log index line {} is not a segment record", i + 1))?;
            if rec.prev != prev {
                bail!("log index line {} breaks the hash chain", i + 1);
            }
            let bytes = fs::read(self.dir.join(&rec.file))
                .with_context(|| format!("reading segment {}", rec.file))?;
            if sha_hex(&bytes) != rec.sha256 {
                bail!("segment {} does not match its recorded hash", rec.file);
            }
            prev = sha_hex(line.as_bytes());
            out.push(rec);
        }
        Ok(out)
    }

    /// Writes `panel` as a new immutable segment.
    pub fn append(&mut self, source: &str, captured_at: DateTime<Utc>, panel: &PricePanel) -> Result<SegmentRecord> {
        let existing = self.segments()?;
        let seq = existing.last().map_or(1, |r| r.seq + 1);
        let prev = self
            .index_lines()?
            .last()
            .map_or_else(|| GENESIS.to_string(), |l| sha_hex(l.as_bytes()));
        let file = format!("{SEGMENTS}/{seq:06}.csv");
        let bytes = panel.to_csv_bytes();
        let path = self.dir.join(&file);
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .and_then(|mut f| f.write_all(&bytes).and_then(|_| f.sync_all()))
            .with_context(|| format!("writing segment {}", path.display()))?;

        let rec = SegmentRecord {
            seq,
            file,
            source: source.to_string(),
            captured_at,
            observations: panel.len(),
            sha256: sha_hex(&bytes),
            prev,
        };
        let mut index = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join(INDEX))
            .context("opening log index")?;
        writeln!(index, "{}", serde_json::to_string(&rec)?).context("appending to log index")?;
        index.sync_all()?;
        Ok(rec)
    }

    /// Rebuilds the panel from every segment in order. Repeated
    /// observations collapse; a cell captured with two different prices is
    /// an error.
    pub fn replay(&self) -> Result<PricePanel> {
        let mut panel = PricePanel::new();
        for rec in self.segments()? {
            let seg = ingest_observations(File::open(self.dir.join(&rec.file))?)
                .with_context(|| format!("parsing segment {}", rec.file))?;
            panel
                .merge(&seg)
                .with_context(|| format!("replaying segment {} ({})", rec.file, rec.source))?;
        }
        Ok(panel)
    }
}
