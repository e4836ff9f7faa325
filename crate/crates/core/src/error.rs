use thiserror::Error;

pub type Result<T, E = PoeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PoeError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("vector length {0} is not a perfect square")]
    NotPerfectSquare(usize),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("matrix is not unitary (max |U^dagger U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("Kraus set is not complete (max |sum K^dagger K - I| = {0:e})")]
    IncompleteKraus(f64),

    #[error("inner product has imaginary part {0:e}; state is corrupted")]
    ComplexOverlap(f64),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("invalid SPAM specification: {0}")]
    InvalidSpam(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("operation not defined for this series: {0}")]
    UnsupportedSeries(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    #[cfg(feature = "cli")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
