use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("position x = {x} is outside bond {bond} of length {length}")]
    OutOfRange { bond: usize, x: f64, length: f64 },

    #[error("bond index {bond} out of range for a graph with {n_bonds} bonds")]
    BondIndex { bond: usize, n_bonds: usize },

    #[error("star graph needs at least {min} bonds, got {actual}")]
    TooFewBonds { min: usize, actual: usize },

    #[error("gap delta0 must be positive, got {0}")]
    ZeroGap(f64),

    #[error("no null space at E = {energy}: smallest relative singular value {sigma_ratio:e}")]
    EmptyNullSpace { energy: f64, sigma_ratio: f64 },

    #[error("singular vertex system at E = {energy}: condition number {condition:e}")]
    SingularSystem { energy: f64, condition: f64 },

    #[error("state has zero norm")]
    ZeroState,

    #[error("invalid scan: {0}")]
    InvalidScan(String),

    #[error("discretisation needs M >= {min}, got {actual}")]
    GridTooSmall { min: usize, actual: usize },

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
