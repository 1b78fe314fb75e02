use std::path::PathBuf;

use geomreg_core::GeomError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Geom(#[from] GeomError),
}

impl CliError {
    /// 0 success, 1 validation/parse, 2 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Io { .. } | CliError::Usage(_) => 1,
            CliError::Geom(GeomError::Validation(_)) => 1,
            CliError::Geom(_) => 2,
        }
    }
}
