use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = TaxonsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TaxonsError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape { expected: Vec<usize>, got: Vec<usize> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("no result: {0}")]
    NoResult(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl TaxonsError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        TaxonsError::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TaxonsError::Io {
            path: path.into(),
            source,
        }
    }
}
