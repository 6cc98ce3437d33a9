use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least {min}, got {got}")]
    InvalidDimension { min: usize, got: usize },

    #[error("correlation {rho} is outside the positive definite range ({lo}, 1)")]
    NotPositiveDefinite { rho: f64, lo: f64 },

    #[error("off-diagonal statistics are undefined for n = {0} (need n >= 2)")]
    UndefinedStatistic(usize),

    #[error("dense materialization of a {n}x{n} matrix exceeds the limit {limit}")]
    DenseTooLarge { n: usize, limit: usize },

    #[error("{0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("Cholesky factorization failed at pivot {pivot}")]
    Factorization { pivot: usize },

    #[error("Mill's ratio bound requires Delta_i > 0 for all i; Delta_{index} = {value}")]
    BoundInapplicable { index: usize, value: f64 },

    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("correlation |rho| = 1 is degenerate")]
    DegenerateCorrelation,
}

pub type Result<T> = std::result::Result<T, Error>;
