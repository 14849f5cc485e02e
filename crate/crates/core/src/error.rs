use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DgganError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DgganError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("data: {0}")]
    Data(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DgganError {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            DgganError::Usage(_) | DgganError::Config(_) | DgganError::Contract(_) => 2,
            DgganError::Data(_) | DgganError::Io { .. } => 3,
            DgganError::Training(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> DgganError {
        let path = path.into();
        move |source| DgganError::Io { path, source }
    }
}
