use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was out of range (arm index, round, dimensions).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A point was outside a regularizer's domain (nonpositive coordinate).
    #[error("domain error: {0}")]
    Domain(String),

    /// A root finder failed to bracket or converge.
    #[error("solver failed: {message} (best residual {best_residual:e})")]
    Solver { message: String, best_residual: f64 },

    /// Feedback did not match what the learner expects for its setting.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Bad experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn solver(message: impl Into<String>, best_residual: f64) -> Self {
        Error::Solver {
            message: message.into(),
            best_residual,
        }
    }
}
