use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("genus mismatch: expected {expected}, got {found}")]
    GenusMismatch { expected: usize, found: usize },

    /// The quaternion is (numerically) ±1, so it has no rotation axis.
    #[error("singular axis: element is central (sin of angle {sin:.3e})")]
    SingularAxis { sin: f64 },

    #[error("singular flow along {curve}: theta = {theta}")]
    SingularFlow { curve: String, theta: f64 },

    #[error("math domain error: {0}")]
    Domain(String),

    #[error("gauge normalization failed: {0}")]
    Normalization(String),

    #[error("commutator equation unsolved after {0} axis draws")]
    CommutatorRetries(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
