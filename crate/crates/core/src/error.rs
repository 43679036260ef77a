use thiserror::Error;

#[derive(Debug, Error)]
pub enum UqpError {
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e} exceeds {tolerance:e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate phase at index {index}: |(Rs)_k| = {modulus:e}")]
    DegeneratePhase { index: usize, modulus: f64 },

    #[error("matrix is singular or not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    Singular { min_eigenvalue: f64 },

    #[error("vectors are linearly dependent")]
    LinearlyDependent,

    #[error("instance too large for enumeration: {candidates} candidates (limit {limit})")]
    TooLarge { candidates: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed matrix file: {0}")]
    MalformedFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, UqpError>;
