use std::path::{Path, PathBuf};

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("acceptance failure: {0}")]
    Acceptance(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 0 success, 1 acceptance failure, 2 validation error, 3 resource cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Acceptance(_) => 1,
            CliError::Validation(_) | CliError::Io { .. } => 2,
            CliError::ResourceCap(_) => 3,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn invalid(key: &str, message: impl std::fmt::Display) -> CliError {
        CliError::Validation(format!("{key}: {message}"))
    }
}

impl From<comoga_core::Error> for CliError {
    fn from(e: comoga_core::Error) -> Self {
        match e {
            comoga_core::Error::EnumerationCap { .. } => CliError::ResourceCap(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}
