use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("`{stage}` requires {what}; run `{producer}` first")]
    Missing { stage: &'static str, what: &'static str, producer: &'static str },
    #[error("output directory {0} is locked by another stage (remove the lock file if stale)")]
    Locked(PathBuf),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) | CliError::Missing { .. } | CliError::Locked(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Infeasible(_) => 4,
        })
    }

    pub fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

pub trait IoContext<T> {
    fn at(self, path: &Path) -> Result<T, CliError>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &Path) -> Result<T, CliError> {
        self.map_err(|source| CliError::Io { path: path.to_path_buf(), source })
    }
}
