use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} sums to {sum}, expected 1")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("row {row} of the generator sums to {sum}, expected 0")]
    GeneratorRowSum { row: usize, sum: f64 },
    #[error("negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("uniformization rate {gamma} is below the largest exit rate {required}")]
    GammaTooSmall { gamma: f64, required: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty input vector")]
    EmptyInput,
    #[error("rank deficient input at index {0}")]
    RankDeficient(usize),
    #[error("initial vector has zero norm")]
    ZeroInitialVector,
    #[error("QR iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("stationary vector has an imaginary part of {0}")]
    ComplexStationary(f64),
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("aggregation carries no stationary vector")]
    MissingStationary,
    #[error("coupling produces an invalid probability {value} at ({row}, {col})")]
    InvalidCoupling { row: usize, col: usize, value: f64 },
    #[error("epsilon {0} must lie strictly between 0 and 1")]
    EpsilonOutOfRange(f64),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }

    /// True for failures of the numerical kernels, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence(_) | Error::ComplexStationary(_))
    }
}
