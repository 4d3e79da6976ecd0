use std::path::{Path, PathBuf};

use carleman_core::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error(transparent)]
    Lab(#[from] LabError),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// Exit status: 2 for usage and configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Lab(LabError::Config(_) | LabError::Cfl { .. }) => 2,
            _ => 1,
        }
    }
}
