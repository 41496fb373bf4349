use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] entropy_rk::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// A run stopped early; whatever was computed has been written.
    #[error("{source} (partial output in {out})")]
    Partial { out: PathBuf, source: entropy_rk::Error },
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(e) => e.category(),
            CliError::Core(e) | CliError::Partial { source: e, .. } => e.category(),
            CliError::Io { .. } => "io",
            CliError::Check(_) => "check",
        }
    }
}
