use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("arithmetic capacity exceeded: {0}")]
    CapacityExceeded(String),

    #[error("job {job} is already on machine {machine}")]
    NoOpMove { job: usize, machine: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("oracle too large: {states} states exceed cap {cap}")]
    OracleTooLarge { states: u128, cap: u128 },

    #[error("resource exhausted after {nodes} nodes (limit {limit})")]
    ResourceExhausted { nodes: u64, limit: u64 },

    #[error("irse {irse} outside [1, 4/3] on instance m={m} weights={weights:?}")]
    BoundViolation { m: usize, weights: Vec<u64>, irse: String },

    #[error("malformed document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}
