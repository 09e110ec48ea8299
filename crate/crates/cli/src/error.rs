use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Malformed document or unknown key; the message carries line and key.
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config validation error: {0}")]
    Validation(String),

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: gibc_core::Error,
    },

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot merge reports: {0}")]
    Merge(String),

    #[error("slope fit: {0}")]
    Fit(String),

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl LabError {
    /// Process exit status: 2 for configuration or usage problems, 3 for
    /// numerical or internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Parse(_) | LabError::Validation(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;

/// Attaches experiment context to core failures.
pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> LabResult<T>;
}

impl<T> Context<T> for gibc_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> LabResult<T> {
        self.map_err(|source| LabError::Numerical {
            context: what(),
            source,
        })
    }
}
