use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] moen_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        match source.kind() {
            csv::ErrorKind::Io(_) => match source.into_kind() {
                csv::ErrorKind::Io(e) => CliError::io(path, e),
                _ => unreachable!(),
            },
            _ => CliError::Csv { path: path.to_path_buf(), source },
        }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        CliError::Format { path: path.to_path_buf(), message: message.into() }
    }

    /// Process exit status: 2 for invalid input, 3 for numerical failure, 4 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Csv { .. } | CliError::Format { .. } => 2,
            CliError::Numerical(e) => match e.root() {
                moen_core::Error::InvalidArgument(_)
                | moen_core::Error::DimensionMismatch { .. }
                | moen_core::Error::NotLinear => 2,
                _ => 3,
            },
            CliError::Io { .. } => 4,
        }
    }
}
