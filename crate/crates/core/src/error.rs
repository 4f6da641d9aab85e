use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A CSV row rejected while loading a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based data row index (the header is row 0).
    pub row: usize,
    pub column: String,
    pub reason: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {} column `{}`: {}", self.row, self.column, self.reason)
    }
}

/// Rows rejected by `load_dataset`, plus the count of rows dropped for
/// missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct RowReport {
    pub rejected: Vec<RowError>,
    pub dropped_missing: usize,
}

impl fmt::Display for RowReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} row(s) rejected, {} row(s) dropped for missing values",
            self.rejected.len(),
            self.dropped_missing
        )?;
        const SHOWN: usize = 20;
        for e in self.rejected.iter().take(SHOWN) {
            write!(f, "\n  {e}")?;
        }
        if self.rejected.len() > SHOWN {
            write!(f, "\n  ... and {} more", self.rejected.len() - SHOWN)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("CSV header is missing column `{0}`")]
    MissingColumn(String),

    #[error("invalid rows: {0}")]
    InvalidRows(RowReport),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("data contains a single class ({0}); both classes are required")]
    SingleClass(u8),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("cannot draw {requested} instances without replacement from a pool of {available}")]
    PoolTooSmall { requested: usize, available: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("unsupported model file version {0}")]
    ModelVersion(u32),

    #[error("counterfactual request rejected: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
