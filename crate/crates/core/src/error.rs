use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the clustering engine and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimensionality mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("k = {k} exceeds the number of records ({records})")]
    TooFewRecords { k: usize, records: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("record {index} has no class label")]
    MissingLabel { index: usize },

    #[error("value {value} at record {record}, attribute {attribute} lies outside [0, 1]")]
    OutOfRange { record: usize, attribute: usize, value: f64 },

    #[error("class {label} has {records} records, fewer than the {chunks} requested chunks")]
    ClassTooSmall { label: i64, records: usize, chunks: usize },

    #[error("chunk timestamp {found} does not follow {previous}")]
    TimestampGap { previous: u64, found: u64 },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }
}
