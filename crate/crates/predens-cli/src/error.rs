use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config file, flag or key. The message names the field and, when
    /// known, the line.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] predens::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{failed} of {total} verification checks failed")]
    Verification { failed: usize, total: usize },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    /// 1 for validation and runtime errors, 2 for failed verification.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Verification { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
