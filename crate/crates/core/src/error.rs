use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("transition for agent {actual} pushed into buffer owned by agent {expected}")]
    Ownership { expected: usize, actual: usize },
    #[error("cannot sample from an empty source: {0}")]
    EmptySource(&'static str),
    #[error("state has never been observed")]
    UnseenState,
    #[error("support violation: {0}")]
    Support(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid action {action} for agent {agent} (action count {num_actions})")]
    Action {
        agent: usize,
        action: usize,
        num_actions: usize,
    },
    #[error("lifecycle error: {0}")]
    Lifecycle(&'static str),
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("version mismatch: expected {expected}, found {found}")]
    Version { expected: u32, found: u32 },
    #[error("numeric divergence: {0}")]
    Divergence(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Shape {
            context,
            expected,
            actual,
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::shape(context, expected, actual))
    }
}
