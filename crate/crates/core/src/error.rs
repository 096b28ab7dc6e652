use thiserror::Error;

/// Errors raised across the compilation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, lengths or indices that do not line up.
    #[error("structural error: {0}")]
    Structural(String),
    /// A numeric parameter outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A hard constraint that can never be satisfied (empty clause).
    #[error("unsatisfiable: {0}")]
    Unsatisfiable(String),
    /// An exhaustive routine was asked to search more than it is allowed to.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A generator was asked for a configuration it cannot build.
    #[error("configuration error: {0}")]
    Configuration(String),
    /// A manifest document failed to parse or validate.
    #[error("manifest error at `{path}`: {message}")]
    Manifest { path: String, message: String },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn manifest(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Manifest {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
