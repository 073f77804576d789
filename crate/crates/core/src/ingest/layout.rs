use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names of the standard 42-field access-log layout.
pub const STANDARD_COLUMNS: [&str; 42] = [
    "LOG_ID",
    "DATE_TIME",
    "USER_ID",
    "ORG_NAME",
    "CHANNEL",
    "ACTION",
    "MATCH_RULE",
    "SIGNATURE_CHECK",
    "DEVICE_CHECK",
    "DEVICE_SIGNATURE",
    "DEVICE_ID",
    "RISK_SCORE",
    "ADVICE",
    "RULE_SET",
    "SESSION_ID",
    "TXN_ID",
    "CALLER_ID",
    "INSTANCE_ID",
    "STATUS",
    "REASON_CODE",
    "AUTH_TYPE",
    "AUTH_STATUS",
    "CLIENT_TYPE",
    "CLIENT_VERSION",
    "IP_ADDRESS",
    "IP_TYPE",
    "COUNTRY",
    "REGION",
    "CITY",
    "LATITUDE",
    "LONGITUDE",
    "ISP",
    "DEVICE_TYPE",
    "DEVICE_OS",
    "SCREEN",
    "TIMEZONE",
    "LANGUAGE",
    "PLUGINS",
    "SECONDARY_AUTH",
    "ELAPSED_MS",
    "NODE",
    "EXTRA",
];

/// Positions of the fields the pipeline reads. Serialized as the sidecar
/// layout file (field name to column index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnLayout {
    pub column_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_id: Option<usize>,
    pub user_id: usize,
    pub timestamp: usize,
    pub match_rule: usize,
    pub signature_check: usize,
    pub device_check: usize,
    pub device_signature: usize,
}

impl Default for ColumnLayout {
    /// The standard 42-column layout.
    fn default() -> Self {
        let col = |name: &str| {
            STANDARD_COLUMNS
                .iter()
                .position(|c| *c == name)
                .expect("standard column")
        };
        ColumnLayout {
            column_count: STANDARD_COLUMNS.len(),
            record_id: Some(col("LOG_ID")),
            user_id: col("USER_ID"),
            timestamp: col("DATE_TIME"),
            match_rule: col("MATCH_RULE"),
            signature_check: col("SIGNATURE_CHECK"),
            device_check: col("DEVICE_CHECK"),
            device_signature: col("DEVICE_SIGNATURE"),
        }
    }
}

impl ColumnLayout {
    pub fn validate(&self) -> Result<()> {
        let cols = [
            Some(self.user_id),
            Some(self.timestamp),
            Some(self.match_rule),
            Some(self.signature_check),
            Some(self.device_check),
            Some(self.device_signature),
            self.record_id,
        ];
        for c in cols.into_iter().flatten() {
            if c >= self.column_count {
                return Err(Error::invalid(format!(
                    "layout column {c} outside column_count {}",
                    self.column_count
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::at_path(path))?;
        let layout: ColumnLayout = serde_json::from_str(&text)?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(Error::at_path(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_42_columns() {
        let l = ColumnLayout::default();
        assert_eq!(l.column_count, 42);
        l.validate().unwrap();
    }

    #[test]
    fn out_of_range_rejected() {
        let l = ColumnLayout {
            device_signature: 42,
            ..ColumnLayout::default()
        };
        assert!(l.validate().is_err());
    }
}
