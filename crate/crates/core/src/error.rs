use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error)]
pub enum JmError {
    #[error("unknown dataset '{name}' (valid: {valid})")]
    UnknownDataset { name: String, valid: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// A model quantity was requested outside its valid regime, e.g. a
    /// failure index beyond the fitted error count.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{method}: root search failed on segment of length {segment_length}: {reason}")]
    Solver {
        method: String,
        segment_length: usize,
        reason: String,
    },

    #[error("unknown method '{0}'")]
    UnknownMethod(String),
}

pub type Result<T> = std::result::Result<T, JmError>;

pub(crate) fn domain(msg: impl Into<String>) -> JmError {
    JmError::Domain(msg.into())
}
