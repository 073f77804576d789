use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown category {value:?} for dimension {dimension}")]
    UnknownCategory { dimension: String, value: String },

    #[error("missing field {field}")]
    MissingField { field: String },

    #[error("line {line}: expected {expected} columns, found {found}")]
    MalformedLine {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: bad timestamp {text:?}")]
    BadTimestamp { line: u64, text: String },

    #[error("invalid range: lo {lo} > hi {hi}")]
    InvalidRange { lo: usize, hi: usize },

    #[error("insufficient data for {context}: need at least {needed}, have {found}")]
    InsufficientData {
        context: String,
        needed: usize,
        found: usize,
    },

    #[error("unknown user {0:?}")]
    UnknownUser(String),

    #[error("data quality: {0}")]
    DataQuality(String),

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn at_path(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Error::Path { path, source }
    }
}
