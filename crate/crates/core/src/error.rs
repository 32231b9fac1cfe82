use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point} is not strictly inside the {domain}")]
    OutsideDomain { domain: String, point: String },

    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("resolution {got} is below the minimum {min}")]
    ResolutionTooSmall { min: usize, got: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("non-finite integrand value at node {index} ({point})")]
    NonFiniteIntegrand { index: usize, point: String },

    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("candidate grid spacing {spacing} is too coarse for radius {radius}; use a spacing below {limit}")]
    GridTooCoarse {
        spacing: f64,
        radius: f64,
        limit: f64,
    },

    #[error("candidate grid would hold {count} points, above the budget of {budget}; raise the boundary margin or the radius")]
    CandidateBudget { count: usize, budget: usize },

    #[error("basis Gram matrix deviates from the identity by {deviation:e} (limit {limit:e}); raise the quadrature resolution")]
    GramDeviation { deviation: f64, limit: f64 },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    PowerIteration { iterations: usize, residual: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
