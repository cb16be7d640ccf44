use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numeric,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numeric => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Data => "data",
            ErrorCategory::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid rotation: {0}")]
    InvalidRotation(String),

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("rate error: {0}")]
    Rate(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("schema violation at line {line}{}: {message}", fmt_record(.record))]
    Schema {
        line: usize,
        record: Option<String>,
        message: String,
    },

    #[error("angle out of range at line {line} (record {record}): {value} is outside [-pi, pi]")]
    AngleOutOfRange {
        line: usize,
        record: String,
        value: f64,
    },

    #[error("unknown emotion {0:?}")]
    UnknownEmotion(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint version mismatch: file has {found}, supported {supported}")]
    CheckpointVersion { found: String, supported: u32 },

    #[error("checkpoint shape mismatch: {0}")]
    CheckpointShape(String),

    #[error("corrupt checkpoint: {0}")]
    CheckpointCorrupt(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("feature error: {0}")]
    Feature(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("stream error: {0}")]
    Stream(String),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn fmt_record(record: &Option<String>) -> String {
    match record {
        Some(id) => format!(" (record {id})"),
        None => String::new(),
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Usage,
            Error::NonFinite(_) => ErrorCategory::Numeric,
            Error::Fold { source, .. } => source.category(),
            _ => ErrorCategory::Data,
        }
    }
}
