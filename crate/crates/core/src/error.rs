use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the reduced-order-modeling toolkit.
#[derive(Debug, Error)]
pub enum RomError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file content. `location` is a byte offset for binary files
    /// and a 1-based line/column description for text files.
    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },
}

pub type Result<T> = std::result::Result<T, RomError>;

impl RomError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RomError::Io { path: path.into(), source }
    }

    pub(crate) fn format(location: impl Into<String>, message: impl Into<String>) -> Self {
        RomError::Format { location: location.into(), message: message.into() }
    }

    pub(crate) fn at_byte(offset: usize, message: impl Into<String>) -> Self {
        Self::format(format!("byte {offset}"), message)
    }
}
