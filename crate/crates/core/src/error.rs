//! Error types shared across the simulator.

use std::path::PathBuf;

/// Errors produced by configuration parsing, the transceiver algebra, and
/// the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration: bad field values, inconsistent dimensions,
    /// unknown keys in a config file.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerically degenerate state was reached (e.g. an all-zero filter
    /// bank fed to a duality transform, or a factorization that failed on a
    /// matrix that should be positive definite).
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    /// A metric aggregation was requested over results that do not contain
    /// the required cells.
    #[error("reporting error: {0}")]
    Report(String),

    /// File I/O failure, with the offending path.
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
