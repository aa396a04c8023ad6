use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability {0}: must lie strictly between 0 and 1")]
    InvalidProbability(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported dimension K = {k} (maximum {max})")]
    UnsupportedDimension { k: usize, max: usize },

    #[error("no similar test exists at level {alpha}: 1/alpha is not an integer")]
    NoSimilarTestExists { alpha: f64 },

    #[error("malformed boundary file: {0}")]
    MalformedFile(String),

    #[error("boundary invariant violated: {0}")]
    InvariantViolation(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error(
        "quadrature did not reach the requested accuracy {requested:e} (achieved {achieved:e})"
    )]
    AccuracyFailure { achieved: f64, requested: f64 },

    #[error("optimization failed: {reason}")]
    OptimizationFailure { reason: String },

    #[error("infeasible constraints: {0}")]
    InfeasibleConstraints(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI in its error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidProbability(_) => "invalid-probability",
            Error::Domain(_) => "domain-error",
            Error::UnsupportedDimension { .. } => "unsupported-dimension",
            Error::NoSimilarTestExists { .. } => "no-similar-test-exists",
            Error::MalformedFile(_) => "malformed-file",
            Error::InvariantViolation(_) => "invariant-violation",
            Error::SingularDesign(_) => "singular-design",
            Error::UndefinedStatistic(_) => "undefined-statistic",
            Error::AccuracyFailure { .. } => "accuracy-failure",
            Error::OptimizationFailure { .. } => "optimization-failure",
            Error::InfeasibleConstraints(_) => "infeasible-constraints",
            Error::InvalidConfig(_) => "invalid-config",
        }
    }

    /// Whether the failure is numerical (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::AccuracyFailure { .. }
                | Error::OptimizationFailure { .. }
                | Error::InfeasibleConstraints(_)
                | Error::SingularDesign(_)
        )
    }
}
