use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ClgError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ClgError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("empty pool")]
    EmptyPool,

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("empty selection")]
    EmptySelection,

    #[error("index error: {0}")]
    Index(String),

    #[error("infeasible selection: n = {n} with {available} rows")]
    Infeasible { n: usize, available: usize },

    #[error("exhaustive search too large: {combinations} combinations exceeds guard {guard}")]
    TooLarge { combinations: u128, guard: u128 },

    #[error("scoring failed for candidate {candidate}: {source}")]
    Scoring {
        candidate: usize,
        #[source]
        source: Box<ClgError>,
    },

    #[error("featurization error: {0}")]
    Featurization(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("matrix format error: {0}")]
    Format(String),

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ClgError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        ClgError::Dimension(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ClgError::Io {
            path: path.into(),
            source,
        }
    }
}
