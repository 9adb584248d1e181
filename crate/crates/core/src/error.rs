use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported state: {0}")]
    UnsupportedState(String),

    #[error("invalid state label `{label}`: {reason}")]
    Label { label: String, reason: String },

    #[error("invalid superposition: {0}")]
    Superposition(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("body index {body} out of range ({n_bodies} bodies)")]
    BodyOutOfRange { body: usize, n_bodies: usize },

    #[error("operation requires a cartesian grid")]
    NotCartesian,

    #[error("all samples are zero")]
    AllZero,

    #[error("point {0:?} lies in the nodal set")]
    Nodal(Vec<f64>),

    #[error("direction field is not unit length (max deviation {0:e})")]
    NonUnitDirection(f64),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unknown equation_id `{0}`")]
    UnknownCheck(String),

    #[error("grid of {points} points exceeds the budget of {limit} points")]
    BudgetExceeded { points: usize, limit: usize },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
