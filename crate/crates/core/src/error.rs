use thiserror::Error;

use crate::stream::Seq;

/// Errors surfaced by the engines, the stream readers and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("duplicate or non-increasing sequence number {seq} (last accepted {last})")]
    OutOfOrder { seq: Seq, last: Seq },

    #[error("action {seq} references parent {parent}, which is not earlier")]
    ParentNotEarlier { seq: Seq, parent: Seq },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no live checkpoint to answer the query")]
    NoCheckpoint,

    #[error("exact enumeration needs {required} subsets, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => 3,
            Error::OutOfOrder { .. } | Error::ParentNotEarlier { .. } => 3,
            Error::Io(_) => 4,
            Error::NoCheckpoint | Error::BudgetExceeded { .. } => 5,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
