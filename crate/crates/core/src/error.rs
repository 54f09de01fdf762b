use thiserror::Error;

/// Errors raised by the library.
///
/// `Validation` covers bad user input (specs, configs, boundary conditions);
/// the remaining variants are runtime conditions of the engines and the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("graph has {edges} edges; enumeration is limited to {limit}")]
    TooLarge { edges: usize, limit: usize },

    #[error("graph structure not supported by this engine: {0}")]
    Structure(String),

    #[error("inadmissible boundary condition: {0}")]
    Inadmissible(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("engine {engine} cannot compute {what}")]
    EngineMismatch { engine: String, what: String },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the caller's input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. } | Error::Inadmissible(_) | Error::EngineMismatch { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
