use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: every mode needs at least two Fock levels")]
    InvalidDimension { dim: usize },

    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("occupation {occupation} does not fit mode `{label}` of dimension {dim}")]
    OccupationOutOfRange { label: String, occupation: usize, dim: usize },

    #[error("truncation at dim {dim} leaves tail weight {tail:.3e} above {tolerance:.1e}; need dim >= {required}")]
    TruncationInsufficient { dim: usize, required: usize, tail: f64, tolerance: f64 },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("density matrix has trace {0}, expected 1")]
    BadTrace(f64),

    #[error("density matrix has negative eigenvalue {0:.3e}")]
    NotPositive(f64),

    #[error("mode selection must be non-empty")]
    EmptySelection,

    #[error("bipartition must split the space into two non-empty parts")]
    TrivialBipartition,

    #[error("mixture weights must be non-negative and not all zero")]
    InvalidWeights,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time integration failed: step-halving change {worst:.3e} above tolerance {tolerance:.1e} after {refinements} refinements")]
    Integration { worst: f64, tolerance: f64, refinements: u32 },

    #[error("Wigner grid too narrow: |W| = {boundary:.3e} on the boundary")]
    GridTooNarrow { boundary: f64 },

    #[error("uncertainty product {product} below 1 at index {index}")]
    UncertaintyViolation { product: f64, index: usize },

    #[error("position {x} outside the admissible range (|x| < {limit})")]
    OutOfRange { x: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numeric failures as opposed to configuration mistakes.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::TruncationInsufficient { .. }
                | Error::NotNormalized(_)
                | Error::NotHermitian(_)
                | Error::BadTrace(_)
                | Error::NotPositive(_)
                | Error::Integration { .. }
                | Error::GridTooNarrow { .. }
                | Error::UncertaintyViolation { .. }
        )
    }
}
