use chrono::NaiveDateTime;
use csv::StringRecord;
use serde::Serialize;

use super::browser::extract_browser;
use super::layout::ColumnLayout;
use super::timestamp::parse_timestamp;
use crate::error::{Error, Result};

/// One parsed access-log line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRecord {
    pub user_id: String,
    /// GMT.
    pub timestamp: NaiveDateTime,
    /// Monday = 0.
    pub day_of_week: u8,
    pub hour_of_day: u8,
    pub match_rule: String,
    pub signature_check: String,
    pub device_check: String,
    pub browser: String,
    /// Device check says the device is known (`YN`/`YY`) but the signature
    /// check is not `Y`.
    pub consistency_violation: bool,
    #[serde(skip)]
    pub raw_fields: StringRecord,
}

impl LogRecord {
    /// Value of the layout's record-id column, if it has one.
    pub fn record_id<'a>(&'a self, layout: &ColumnLayout) -> Option<&'a str> {
        layout.record_id.and_then(|c| self.raw_fields.get(c))
    }
}

pub(crate) fn signature_inconsistent(device_check: &str, signature_check: &str) -> bool {
    matches!(device_check, "YN" | "YY") && signature_check != "Y"
}

/// Builds a record from already-split fields. `line` is used in errors only.
pub fn parse_fields(fields: StringRecord, layout: &ColumnLayout, line: u64) -> Result<LogRecord> {
    if fields.len() != layout.column_count {
        return Err(Error::MalformedLine {
            line,
            expected: layout.column_count,
            found: fields.len(),
        });
    }
    let get = |c: usize| fields.get(c).unwrap_or("").trim();
    let ts_text = get(layout.timestamp);
    let (timestamp, day_of_week, hour_of_day) = parse_timestamp(ts_text).map_err(|_| {
        Error::BadTimestamp {
            line,
            text: ts_text.to_owned(),
        }
    })?;
    let user_id = get(layout.user_id);
    if user_id.is_empty() {
        return Err(Error::MissingField {
            field: format!("user id (line {line})"),
        });
    }
    let signature_check = get(layout.signature_check).to_owned();
    let device_check = get(layout.device_check).to_owned();
    let device_signature = get(layout.device_signature);
    Ok(LogRecord {
        user_id: user_id.to_owned(),
        timestamp,
        day_of_week,
        hour_of_day,
        match_rule: get(layout.match_rule).to_owned(),
        consistency_violation: signature_inconsistent(&device_check, &signature_check),
        browser: extract_browser(device_signature).to_owned(),
        signature_check,
        device_check,
        raw_fields: fields,
    })
}

/// Parses one comma-separated line (quoted fields allowed).
pub fn parse_log_line(line: &str, layout: &ColumnLayout, line_no: u64) -> Result<LogRecord> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(line.as_bytes());
    let mut fields = StringRecord::new();
    if !reader.read_record(&mut fields)? {
        return Err(Error::MalformedLine {
            line: line_no,
            expected: layout.column_count,
            found: 0,
        });
    }
    parse_fields(fields, layout, line_no)
}
