use std::path::PathBuf;

/// Errors produced by the simulation and estimation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The truncated Fock-space oracle lost too much norm to be trusted.
    #[error("Fock truncation: retention {retention:.6} at cutoff {cutoff} (raise the cutoff)")]
    Truncation { retention: f64, cutoff: usize },

    /// Invalid experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
