use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for a passing run.
pub const EXIT_PASS: i32 = 0;
/// A check failed or the numerics broke down.
pub const EXIT_CHECK_FAILURE: i32 = 1;
/// Bad flags, unreadable or invalid configuration.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("invalid config {path}: {reason}")]
    Config { path: PathBuf, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(#[from] stochclifford::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Param { .. } => EXIT_USAGE,
            _ => EXIT_CHECK_FAILURE,
        }
    }

    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        CliError::Param {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
