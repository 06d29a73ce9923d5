use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("infeasible marginals: total masses {left} and {right} differ")]
    InfeasibleMarginals { left: f64, right: f64 },

    #[error("resolution error: mollifier scale {eps} is below twice the grid spacing {h}")]
    Resolution { eps: f64, h: f64 },

    #[error("CFL violation: courant number {courant} exceeds {limit}")]
    Cfl { courant: f64, limit: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("divergent quantity: {0}")]
    Divergent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
