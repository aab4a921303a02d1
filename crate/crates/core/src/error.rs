use thiserror::Error;

/// Errors shared by all library modules.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("input points are not on an equidistant grid: {0}")]
    NonGridInput(String),
    #[error("bad probability mass: {0}")]
    BadMass(String),
    #[error("invalid mixture specification: {0}")]
    BadSpec(String),
    #[error("distribution has zero variance")]
    ZeroVariance,
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("recursion start value underflows ({0})")]
    Underflow(String),
    #[error("convolution result too large: {0} points (limit {1})")]
    TooLarge(usize, usize),
    #[error("severity distribution has mass {0} at zero; support must lie in h*{{1,2,...}}")]
    MassAtZero(f64),
    #[error("compound-binomial claim probability must lie in (0,1), got {0}")]
    DegenerateP(f64),
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("quadrature failed to reach tolerance {requested:e} (estimated error {achieved:e})")]
    QuadratureFailure { requested: f64, achieved: f64 },
    #[error("invalid distortion function: {0}")]
    InvalidDistortion(String),
    #[error("root finding did not converge: {0}")]
    NonConvergence(String),
    #[error("distribution is not standardized (mean {mean:e}, variance {variance})")]
    NotStandardized { mean: f64, variance: f64 },
    #[error("degenerate probe data: {0}")]
    DegenerateData(String),
    #[error("need at least {needed} points for the regression, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("regression requires strictly positive errors, got {0}")]
    NonPositiveError(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
