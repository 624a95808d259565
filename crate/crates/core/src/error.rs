use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {field} at row {row}, column {col}")]
    NonFiniteEntry { field: &'static str, row: usize, col: usize },

    #[error("constant column {index} in {field} (zero variance)")]
    ConstantColumn { field: &'static str, index: usize },

    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("rho must lie in [0, 1), got {0}")]
    RhoOutOfRange(f64),

    #[error("dimension too small: {0}")]
    DimensionTooSmall(String),

    #[error("sparsity {s} exceeds dimension {p}")]
    SparsityExceedsDimension { s: usize, p: usize },

    #[error("coordinate descent did not converge after {sweeps} sweeps (max change {max_change:.3e}, KKT residual {kkt:.3e})")]
    NonConvergence { sweeps: usize, max_change: f64, kkt: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("unknown nuisance method '{0}'")]
    UnknownMethod(String),

    #[error("non-positive variance estimate: Lambda_hat = {0}")]
    NonPositiveVarianceEstimate(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("column index {index} out of range (1..={max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Numerical failures that a fresh split or fresh dataset may avoid.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveVarianceEstimate(_)
                | Error::NonConvergence { .. }
                | Error::DegenerateInput(_)
                | Error::Domain(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
