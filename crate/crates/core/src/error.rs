use thiserror::Error;

use crate::prefgraph::PrefGraphError;
use crate::table::TableError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DivisionError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Graph(#[from] PrefGraphError),
    /// A guarantee that should always hold was violated.
    #[error("contradiction: {0}")]
    Contradiction(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl DivisionError {
    /// True for failures caused by the caller rather than by the engine.
    pub fn is_input_error(&self) -> bool {
        matches!(self, DivisionError::Unsupported(_) | DivisionError::InvalidInput(_))
    }
}
