use thiserror::Error;

/// Errors raised by the design constructions and verifiers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("outside the supported domain: {0}")]
    Domain(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("Kraus operators are not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("incomplete tomography grid, missing cells: {0}")]
    Incomplete(String),
    #[error("rank-deficient matrix: rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
