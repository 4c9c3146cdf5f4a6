use thiserror::Error;

use crate::model::{AgentId, ClusterId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown cluster id {0}")]
    UnknownCluster(ClusterId),

    #[error("unknown agent id {0}")]
    UnknownAgent(AgentId),

    #[error("cluster {0} has no members")]
    EmptyCluster(ClusterId),

    #[error("agent table is empty")]
    NoAgents,

    #[error("{field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("field overflow: {participants} participants with magnitude {magnitude} exceed the headroom of p = {prime} at scale {scale}")]
    FieldOverflow {
        participants: usize,
        magnitude: f64,
        prime: u64,
        scale: u64,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
