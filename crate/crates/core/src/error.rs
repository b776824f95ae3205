use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },

    /// A row with zero norm where a normalized update is required; carries the
    /// row index when known.
    #[error("{}", zero_row_message(*.0))]
    ZeroRow(Option<usize>),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("component {0} has zero weight but a nonzero gradient")]
    UnreachableComponent(usize),

    #[error("bound undefined: {0}")]
    BoundUndefined(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn zero_row_message(index: Option<usize>) -> String {
    match index {
        Some(i) => format!("row {i} has zero norm"),
        None => "row has zero norm".to_string(),
    }
}
