//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by emulator construction, fitting and prediction.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of two related quantities disagree.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// An argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A linear-algebra or likelihood computation failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A fit failed while processing one level of a multi-level model.
    #[error("fit failed at level {level}: {source}")]
    LevelFit {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    /// The requested operation is outside the model's contract.
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

impl Error {
    /// Attach a level index to an error bubbling out of a per-level fit.
    pub fn at_level(self, level: usize) -> Self {
        Error::LevelFit {
            level,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
