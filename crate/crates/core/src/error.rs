use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Cell bisection kept failing the gauge beyond the configured depth.
    #[error("resource limit: bisection depth {depth} exceeded near x = {near}")]
    ResourceLimit { depth: usize, near: f64 },

    #[error("integrand error: {0}")]
    Integrand(String),

    #[error("no convergence after {refinements} refinements (value {value}, error estimate {abs_error_estimate:e})")]
    NoConvergence {
        value: num_complex::Complex64,
        abs_error_estimate: f64,
        refinements: usize,
    },

    #[error("dimension {n} exceeds the cap of {cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("association error: {0}")]
    Association(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("no m <= {cap} satisfies the bounded-convergence inequality")]
    NoMFound { cap: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
