use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Observed data contradict the assumptions of a decoder (for example two
    /// plaintexts recorded for one ciphertext letter).
    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A cache or checkpoint file is malformed.
    #[error("bad file format: {0}")]
    Format(String),

    /// Training produced a NaN or infinite loss.
    #[error("non-finite loss {loss} at step {step}")]
    NonFiniteLoss { step: u64, loss: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
