use std::path::PathBuf;

/// Errors produced by dataset ingestion, numerical routines and the
/// pipeline driver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying I/O failure, annotated with the offending path.
    #[error("I/O error on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file content. `location` is a human-readable position
    /// such as `line 3` or `offset 16`.
    #[error("parse error in `{path}` at {location}: {message}")]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },

    /// Dimension mismatch or ragged input.
    #[error("shape error: {0}")]
    Shape(String),

    /// Input violates a domain invariant (non-finite value, empty
    /// dataset, inconsistent labels, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// An argument is outside the documented domain of an operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical routine failed (e.g. a Cholesky factorization of a
    /// matrix that is not positive definite).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The synthetic data generator could not satisfy its placement
    /// constraints.
    #[error("generation error: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl Into<PathBuf>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.into(),
            location: location.into(),
            message: message.into(),
        }
    }
}
