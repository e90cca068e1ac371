use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {actual}")]
    Dimension {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("triangular factor is singular: |r[{index}][{index}]| = {value:e}")]
    SingularTriangular { index: usize, value: f64 },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("Jacobi SVD did not converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },

    #[error("pseudo-inverse step {step} failed: {source}")]
    PinvStep {
        step: u8,
        #[source]
        source: Box<Error>,
    },

    #[error("XX^T would be {rows}x{rows}, above the configured cap of {cap} rows")]
    GramTooLarge { rows: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}, column {col}: {msg}")]
    Parse {
        path: String,
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(op: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            op,
            expected,
            actual,
        }
    }

    /// True for failures caused by the input data or files rather than by
    /// the numerics.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Dimension { .. }
            | Error::NonFinite { .. }
            | Error::Parse { .. }
            | Error::Io { .. } => true,
            Error::PinvStep { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
