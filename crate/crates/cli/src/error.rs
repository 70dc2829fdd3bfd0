use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Core(#[from] dchaos::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad input, 3 when a finer precision window is needed, 4 when a
    /// construction ran past what it materializes, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) | CliError::Core(dchaos::Error::InvalidParameter(_)) => 2,
            CliError::Core(dchaos::Error::PrecisionInsufficient { .. }) => 3,
            CliError::Core(dchaos::Error::MaterializationBound(_)) => 4,
            _ => 1,
        }
    }
}
