use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected {expected} points, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("inadmissible state: gap {gap:e} at node {node} (x = {x})")]
    Inadmissible { node: usize, x: f64, gap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point at distance {distance:e} from an interface (minimum {limit:e})")]
    TooClose { distance: f64, limit: f64 },

    #[error("operator requires {0}")]
    Precondition(String),

    #[error("time step {dt:e} fell below the floor {dt_min:e} at t = {t}")]
    StepUnderflow { t: f64, dt: f64, dt_min: f64 },
}
