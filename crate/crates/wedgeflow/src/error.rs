use std::path::PathBuf;

use thiserror::Error;
use wedgeflow_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    /// A certificate or structural check came out negative.
    #[error("check failed: {0}")]
    Failed(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// 1 = usage or input, 2 = solver non-convergence, 3 = failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::NotConverged { .. }) => 2,
            CliError::Core(CoreError::TheoremViolation(_)) | CliError::Failed(_) => 3,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
