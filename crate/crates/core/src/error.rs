use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the CLI to pick an exit code: bad arguments
/// (2), bad input data (3), numerical failure (4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("panel must have at least 2 rows and 1 column, got {rows}x{cols}")]
    PanelShape { rows: usize, cols: usize },

    #[error("ragged input: row {row} has {got} fields, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense grid needs {cells} cells, over the sparse budget of {budget}; lower the resolution or dimension")]
    SparseBudget { cells: u128, budget: usize },

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("invalid target set: {0}")]
    InvalidTargets(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("sample too small: need more than {need} observations, got {got}")]
    SampleTooSmall { need: usize, got: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{failed} of {total} trials failed (budget is 5%); first failure: {first}")]
    TrialFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("{path}: {message}")]
    Csv { path: String, message: String },

    #[error("{path}: {message}")]
    Json { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::InvalidParameter(_) | Error::SparseBudget { .. } => Category::Usage,
            Error::NonFinite { .. }
            | Error::PanelShape { .. }
            | Error::Ragged { .. }
            | Error::DimensionMismatch { .. }
            | Error::LengthMismatch { .. }
            | Error::InvalidSignature(_)
            | Error::InvalidTargets(_)
            | Error::Degenerate(_)
            | Error::SampleTooSmall { .. }
            | Error::Csv { .. }
            | Error::Json { .. }
            | Error::Io { .. } => Category::Data,
            Error::Solver(_) | Error::TrialFailures { .. } => Category::Numerical,
        }
    }
}
