use std::fmt;

use thiserror::Error;

use crate::model::PropSet;

/// Errors produced anywhere in the synthesis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Validation(String),

    #[error("state {state}: guards `{first}` and `{second}` both hold under {witness}")]
    DfaOverlap {
        state: String,
        first: String,
        second: String,
        witness: Witness,
    },

    #[error("state {state}: no guard holds under {witness}")]
    DfaIncomplete { state: String, witness: Witness },

    #[error("state {state}: guard support has {size} propositions (limit {limit})")]
    SupportTooLarge {
        state: String,
        size: usize,
        limit: usize,
    },

    #[error("refinement: {0}")]
    Refine(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("policy: {0}")]
    Policy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    /// Process exit status for this error: 2 for malformed input, 3 for
    /// inputs that parse but violate a model invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Valuation reported by the DFA determinism check: the set of true propositions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness(pub PropSet);

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}
