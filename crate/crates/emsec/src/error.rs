//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A documented precondition of an operation was not met by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// No clock component could be recovered from a trace.
    #[error("clock not found: quality {quality:.4} below threshold {threshold}")]
    ClockNotFound { quality: f64, threshold: f64 },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    /// NaN or infinity appeared during a network pass; `layer` is the index
    /// of the layer whose output was non-finite.
    #[error("numeric failure in layer {layer}: {message}")]
    NumericFailure { layer: usize, message: String },
    /// Classifier features carry no information to separate the classes.
    #[error("degenerate classifier: {0}")]
    DegenerateClassifier(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
