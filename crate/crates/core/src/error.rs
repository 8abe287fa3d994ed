use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the planner, search, and file layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("planning failed: {0}")]
    PlanningFailure(String),

    #[error("unsolved instance: {0}")]
    Unsolved(String),

    #[error("invalid scenario at `{field}`: {message}")]
    InvalidScenario { field: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn scenario(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidScenario {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures that mean "no solution found" rather than bad input.
    pub fn is_unsolved(&self) -> bool {
        matches!(self, Error::PlanningFailure(_) | Error::Unsolved(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
