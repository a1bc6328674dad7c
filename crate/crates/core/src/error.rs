use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates its bounds.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The dataset contains no hotspots.
    #[error("dataset is empty: at least one hotspot is required")]
    EmptyDataset,

    /// A requested cluster id does not exist in the result.
    #[error("unknown cluster id {0}")]
    UnknownCluster(i64),

    /// A required column is missing from a CSV header.
    #[error("missing column `{column}` in {path}")]
    MissingColumn { column: String, path: PathBuf },

    /// A row of an input file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },

    /// An internal invariant of the sweep was violated.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
