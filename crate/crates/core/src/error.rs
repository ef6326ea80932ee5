use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate batch schedule for n = {n}: batch size {b}, {a} batches (need at least 2)")]
    ScheduleDegenerate { n: usize, b: usize, a: usize },
    #[error("invalid batch rule: {0}")]
    InvalidRule(String),
    #[error("trace has {len} values but the schedule needs {needed}")]
    TraceTooShort { len: usize, needed: usize },
    #[error("non-finite value at index {index}")]
    NonFiniteInput { index: usize },
    #[error("empty trace")]
    EmptyTrace,
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("variance estimate is zero")]
    ZeroVarianceEstimate,
    #[error("lag {lag} is not smaller than the trace length {len}")]
    LagTooLarge { lag: usize, len: usize },
    #[error("autoregressive coefficient must satisfy |rho| < 1, got {0}")]
    InvalidRho(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("regression coefficient {index} is exactly zero")]
    DegenerateBeta { index: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("autocovariance sum does not converge (operator-norm bound {0} >= 1)")]
    NonConvergent(f64),
    #[error("missing cells: {0}")]
    MissingCells(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid histogram range [{lo}, {hi}] with {bins} bins")]
    InvalidRange { lo: f64, hi: f64, bins: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Errors caused by bad user input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NumericalBreakdown(_)
                | Error::NotPositiveDefinite
                | Error::DegenerateBeta { .. }
                | Error::NonConvergent(_)
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
