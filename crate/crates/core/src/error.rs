//! Library error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    /// An instance or solution field violates a documented invariant.
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },

    /// Degenerate instance: every city coincides, so the optimal makespan
    /// is zero and no grid can be built. Callers short-circuit to the
    /// all-at-depot solution.
    #[error("trivial instance: all cities coincide")]
    Trivial,

    /// An exhaustive oracle refused an instance above its size gate.
    #[error("instance too large for {solver}: {message}")]
    TooLarge { solver: &'static str, message: String },
}

impl Error {
    pub fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            message: message.into(),
        }
    }

    pub fn too_large(solver: &'static str, message: impl Into<String>) -> Self {
        Error::TooLarge {
            solver,
            message: message.into(),
        }
    }
}
