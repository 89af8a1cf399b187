use std::path::{Path, PathBuf};

use treedg::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid or unparsable configuration.
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Malformed state files and similar input problems.
    #[error("{0}")]
    Input(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 2 configuration, 3 divergence, 4 capacity, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Core(Error::Config(_)) => 2,
            Self::Core(Error::Divergence { .. } | Error::Limiter { .. } | Error::Admissibility { .. }) => 3,
            Self::Core(Error::Capacity { .. }) => 4,
            _ => 1,
        }
    }
}
