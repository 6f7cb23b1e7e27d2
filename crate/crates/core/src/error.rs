use std::path::PathBuf;

use thiserror::Error;

use crate::triplet::Dimensions;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An index that is below 1, non-integral, NaN, or outside the 32-bit signed range.
    #[error("bad index {value} at position {position}")]
    BadIndex { position: usize, value: f64 },

    #[error("length mismatch: {rows} row indices, {cols} column indices, {values} values")]
    LengthMismatch {
        rows: usize,
        cols: usize,
        values: usize,
    },

    #[error("dimensions {given} are too small, indices require at least {required}")]
    DimensionTooSmall {
        given: Dimensions,
        required: Dimensions,
    },

    #[error("{what} = {value} exceeds the supported limit {limit}")]
    LimitExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("worker count must be at least 1")]
    InvalidThreadCount,

    #[error("instrumentation is not compiled in (enable the `instrument` feature)")]
    InstrumentationUnavailable,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown dataset {0} (expected 1, 2 or 3)")]
    UnknownDataset(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{left} and {right} disagree: {detail}")]
    ResultMismatch {
        left: String,
        right: String,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
