use std::path::PathBuf;

use importance_sgd::Error as LibError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Library(#[from] LibError),
}

impl CliError {
    /// 0 success, 2 bad input or usage, 3 degenerate problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Library(
                LibError::Degenerate(_) | LibError::ZeroRow(_) | LibError::UnreachableComponent(_),
            ) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
