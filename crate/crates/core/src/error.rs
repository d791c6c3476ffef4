use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("column {0} is all zeros")]
    ZeroColumn(usize),

    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("too few points: {points} points cannot form {clusters} clusters of at least 2 points")]
    TooFewPoints { points: usize, clusters: usize },

    #[error("invalid cluster count {clusters} for {points} points")]
    InvalidClusterCount { clusters: usize, points: usize },

    #[error("lambda0 scale is undefined: some point has zero correlation with every other point")]
    DegenerateScale,

    #[error("symmetric eigensolver failed to converge")]
    EigenFailure,

    #[error("affinity matrix has zero diagonal mass")]
    DegenerateAffinity,

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("line {line}, column {col}: {message}")]
    Parse { line: usize, col: usize, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("invalid result: {0}")]
    InvalidResult(String),
}

pub type Result<T> = std::result::Result<T, Error>;
