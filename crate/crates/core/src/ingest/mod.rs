//! Access-log ingestion: parsing delimited lines, deriving the browser and
//! time fields, and grouping records per user.

mod browser;
mod layout;
mod record;
mod store;
mod timestamp;

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use csv::StringRecord;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use browser::{extract_browser, UNKNOWN_BROWSER};
pub use layout::{ColumnLayout, STANDARD_COLUMNS};
pub use record::{parse_fields, parse_log_line, LogRecord};
pub use store::{
    group_by_user, select_users_by_frequency, user_file_name, StoreManifest, UserEntry, UserStore,
};
pub use timestamp::{format_timestamp, parse_timestamp};

use crate::error::{Error, Result};

/// How malformed lines are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// Skip and count malformed lines.
    #[default]
    Lenient,
    /// Fail on the first malformed line.
    Strict,
}

impl std::str::FromStr for ParseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lenient" => Ok(ParseMode::Lenient),
            "strict" => Ok(ParseMode::Strict),
            other => Err(Error::invalid(format!("unknown parse mode {other:?}"))),
        }
    }
}

const MAX_REPORTED_ERRORS: usize = 20;

/// Line accounting for one ingestion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines: u64,
    pub parsed: u64,
    pub skipped: u64,
    pub consistency_violations: u64,
    /// First few skip reasons.
    pub errors: Vec<String>,
}

impl IngestReport {
    fn absorb(&mut self, other: IngestReport) {
        self.lines += other.lines;
        self.parsed += other.parsed;
        self.skipped += other.skipped;
        self.consistency_violations += other.consistency_violations;
        for e in other.errors {
            if self.errors.len() < MAX_REPORTED_ERRORS {
                self.errors.push(e);
            }
        }
    }

    pub fn malformed_fraction(&self) -> f64 {
        if self.lines == 0 {
            0.0
        } else {
            self.skipped as f64 / self.lines as f64
        }
    }
}

/// Streams records from `reader` into `sink`.
pub fn read_records<R: Read>(
    reader: R,
    layout: &ColumnLayout,
    mode: ParseMode,
    mut sink: impl FnMut(LogRecord),
) -> Result<IngestReport> {
    layout.validate()?;
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut report = IngestReport::default();
    let mut fields = StringRecord::new();
    loop {
        let line = csv_reader.position().line();
        let outcome = match csv_reader.read_record(&mut fields) {
            Ok(false) => break,
            Ok(true) => parse_fields(std::mem::take(&mut fields), layout, line),
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => Err(Error::from(e)),
        };
        report.lines += 1;
        match outcome {
            Ok(record) => {
                report.parsed += 1;
                if record.consistency_violation {
                    report.consistency_violations += 1;
                }
                sink(record);
            }
            Err(e) => {
                if mode == ParseMode::Strict {
                    return Err(Error::DataQuality(e.to_string()));
                }
                report.skipped += 1;
                if report.errors.len() < MAX_REPORTED_ERRORS {
                    report.errors.push(e.to_string());
                }
            }
        }
    }
    Ok(report)
}

/// Expands directories into the files they directly contain, sorted.
pub fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        let meta = std::fs::metadata(p).map_err(Error::at_path(p))?;
        if meta.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(Error::at_path(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && is_log_file(f))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn is_log_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("csv" | "log" | "txt")
    )
}

/// Parses every file (in parallel) and groups the records by user.
///
/// Shards are merged in input order, so the result does not depend on
/// thread scheduling.
pub fn ingest_paths(
    paths: &[PathBuf],
    layout: &ColumnLayout,
    mode: ParseMode,
) -> Result<(UserStore, IngestReport)> {
    let files = expand_inputs(paths)?;
    let shards = files
        .par_iter()
        .map(|path| {
            let file = File::open(path).map_err(Error::at_path(path))?;
            let mut records = Vec::new();
            let report = read_records(std::io::BufReader::new(file), layout, mode, |r| {
                records.push(r)
            })
            .map_err(|e| match e {
                Error::DataQuality(msg) => Error::DataQuality(format!("{}: {msg}", path.display())),
                other => other,
            })?;
            Ok((group_by_user(records), report))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut store = UserStore::default();
    let mut report = IngestReport::default();
    for (shard, r) in shards {
        store = store.merge(shard);
        report.absorb(r);
    }
    Ok((store, report))
}
