use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("inverse DFT left an imaginary residue of {residue:e} (limit {limit:e})")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("power iteration did not reach tolerance after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("iterate norm {norm:e} exceeded the divergence guard at iteration {iteration}")]
    Divergence { iteration: usize, norm: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("row slice {row} has a vanishing Gram tube")]
    DegenerateRow { row: usize },

    #[error("row slice {row} is identically zero")]
    ZeroRowSlice { row: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("non-finite value at flat offset {offset}")]
    NonFinite { offset: usize },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
