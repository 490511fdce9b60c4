use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported (map, set) pair: {map} x {set}")]
    UnsupportedPair { map: String, set: String },

    #[error("infeasible start: {0}")]
    InfeasibleStart(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("labels must be in {{-1, +1}}: {0}")]
    BadLabels(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("no minimizer available; supply x_* or attach a known optimum to the problem")]
    MissingOptimum,

    #[error("set is unbounded; supply a bounding box")]
    UnboundedSet,

    #[error("component infimum is not finite; Polyak-type stepsizes need f_i^* > -inf")]
    UnknownInfimum,

    #[error("zero gradient at a non-optimal point (gap {gap:e})")]
    ZeroGradientAtNonOptimum { gap: f64 },

    #[error("iterate diverged at step {t}")]
    NumericalDivergence { t: usize },

    #[error("{diverged} of {replicates} replicates diverged")]
    TooManyDivergent { diverged: usize, replicates: usize },

    #[error("bound specification incomplete: missing {0}")]
    IncompleteSpec(&'static str),

    #[error("metric is not positive at t = {t}")]
    NonPositiveMetric { t: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
