use thiserror::Error;

/// Errors raised across the library.
///
/// Variants map onto the failure classes the CLI turns into exit codes:
/// everything except [`Error::Internal`] is a validation failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate window: {0}")]
    DegenerateWindow(String),
    #[error("degenerate neighborhood: {0}")]
    DegenerateNeighborhood(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by bad inputs rather than solver failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
