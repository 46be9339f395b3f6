use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("kernel scale {scale} exceeds the guard n/8 = {limit}")]
    ScaleTooLarge { scale: f64, limit: f64 },

    #[error("probe scale guard violated: {0}")]
    ScaleGuard(String),

    #[error("clamped spectral mass fraction {fraction:.3e} exceeds budget {budget:.1e}")]
    ClampBudgetExceeded { fraction: f64, budget: f64 },

    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("contrast delta = {0} outside [0, 1)")]
    DeltaOutOfRange(f64),

    #[error("epsilon = {epsilon} is not of the form m/n on a grid with n = {n}")]
    EpsilonNotCommensurate { epsilon: f64, n: usize },

    #[error("quadrature not converged: last refinement changed the result by {change:.3e}")]
    QuadratureNotConverged { change: f64 },

    #[error("too few samples: {got} < {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("non-positive value {value} at abscissa {abscissa} in log-log fit")]
    NonPositiveValue { abscissa: f64, value: f64 },

    #[error("rate law `{name}` has no branch for d = {d}, beta = {beta}")]
    UnknownBranch {
        name: &'static str,
        d: usize,
        beta: f64,
    },

    #[error("unknown {kind} `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("sample {index} failed: {source}")]
    Sample {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
