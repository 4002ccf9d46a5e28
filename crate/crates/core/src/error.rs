use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed header, unknown magic or unsupported version.
    #[error("format error: {0}")]
    Format(String),

    /// Payload shorter or longer than the header announces.
    #[error("length error: {0}")]
    Length(String),

    /// Non-finite or otherwise unusable numeric values.
    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Caller broke a documented precondition (shape mismatch, index out of range, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {residual:e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("cannot drop views from single-view data (missing rate {0})")]
    InfeasibleDrop(f64),

    #[error("could not draw a mask with every view non-empty after {0} attempts")]
    DegenerateMask(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
