use std::path::PathBuf;

use crate::format::FormatError;

/// Everything the runner and the binary can fail with, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid parameter: {0}")]
    Core(#[from] cim_core::Error),
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("resource guard: {0}")]
    Resource(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(_) => 3,
            CliError::Format { .. } => 4,
            CliError::Io { .. } => 5,
            CliError::Resource(_) => 6,
            CliError::Refused(_) => 7,
            CliError::Output(_) => 8,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(_) => "parameter",
            CliError::Format { .. } => "format",
            CliError::Io { .. } => "io",
            CliError::Resource(_) => "resource",
            CliError::Refused(_) => "refused",
            CliError::Output(_) => "output",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
