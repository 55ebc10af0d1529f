use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cone shape n1={n1}, n2={n2}: {reason}")]
    InvalidShape { n1: usize, n2: usize, reason: &'static str },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector is not unit length (norm {0})")]
    NonUnitVector(f64),
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("polynomial degree {0} is odd")]
    OddDegree(usize),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("unsupported cone for this format: {0}")]
    UnsupportedCone(String),
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("external solver: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
