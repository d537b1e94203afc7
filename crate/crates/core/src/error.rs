use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("non-finite value at row {row}, column {col}")]
    Data { row: usize, col: usize },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    Dim(usize, usize),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("infinite divergence: P({index}) > 0 where Q({index}) = 0")]
    InfiniteDivergence { index: usize },

    #[error("out-of-order epoch {epoch} (last recorded {last})")]
    Sequence { epoch: u64, last: u64 },

    #[error("monitor already stopped at epoch {0}")]
    State(u64),

    #[error("tuning failed: {0}")]
    Tuning(String),

    #[error("external command failed ({status}): {output}")]
    External { status: String, output: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 for input problems, 2 for numerical
    /// failures, 3 for external-command failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::InfiniteDivergence { .. } => 2,
            Error::External { .. } | Error::Tuning(_) => 3,
            _ => 1,
        }
    }
}
