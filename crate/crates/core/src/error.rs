use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("label collision: {0}")]
    LabelCollision(String),
    #[error("non-finite coefficient: {0}")]
    NonFinite(String),
    #[error("degenerate average of multicast beams")]
    DegenerateAverage,
    #[error("empty input: {0}")]
    Empty(String),
    #[error("no feasible initial point after {attempts} attempts")]
    NoInitialPoint { attempts: usize },
    #[error("unrepairable solution after {rounds} repair rounds")]
    Unrepairable { rounds: usize },
    #[error("instance too large: {0} candidate tuples exceed the enumeration cap")]
    InstanceTooLarge(u128),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
