use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on user-supplied arguments was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Not enough observations to carry out the requested fit.
    #[error("insufficient data: needed {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// A linear system stayed singular even after ridge regularization.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// An evaluation point lies outside the fitted domain.
    #[error("point outside fitted domain: coordinate {dim} = {value} not in [{lo}, {hi}]")]
    OutOfDomain {
        dim: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A guarded exact computation was requested beyond its size limit.
    #[error("problem too large for exact computation: n = {n}, limit = {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
