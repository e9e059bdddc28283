use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("quadrature did not converge (estimate {value}, residual {residual:e})")]
    Quadrature { value: f64, residual: f64 },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("configuration check failed: {0}")]
    Configuration(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("set is not representable as a radial graph: {0}")]
    NotStarShaped(String),

    #[error("ball center {0:?} is not supported by the per-ray formula (|center| must be < 1)")]
    UnsupportedCenter([f64; 3]),

    #[error(
        "sphere grid under-resolved: Gram entry of y{a:?} and y{b:?} (degree, index) deviates by {deviation:e}"
    )]
    UnderResolved {
        a: (usize, usize),
        b: (usize, usize),
        deviation: f64,
    },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("empty set")]
    EmptySet,

    #[error("reduction not applicable: {0}")]
    NotApplicable(String),

    #[error("nearly-spherical regime violated: {0}")]
    EpsilonRegime(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
