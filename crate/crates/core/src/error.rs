use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: at least one point is required")]
    EmptyInput,

    #[error("dimension mismatch at row {row}: expected {expected} coordinates, found {found}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite coordinate at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid bandwidth {0}: must be positive and finite")]
    InvalidBandwidth(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error(
        "no admissible q: no q >= 1 satisfies 2|lambda_q| + {epsilon} < |lambda_r| \
         (r = {r}, |lambda_1| = {lambda_1}, |lambda_r| = {lambda_r})"
    )]
    NoAdmissibleQ {
        r: usize,
        epsilon: f64,
        lambda_1: f64,
        lambda_r: f64,
    },

    #[error("estimation failed: every probed candidate was degenerate")]
    EstimationFailure,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::NoAdmissibleQ { .. } | Error::EstimationFailure
        )
    }
}
