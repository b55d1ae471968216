use std::path::PathBuf;

use thiserror::Error;

use crate::sparse::SparseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error(transparent)]
    Sparse(#[from] SparseError),

    #[error("shift {shift} coincides with an eigenvalue (factorization failed: {source})")]
    ShiftAtEigenvalue { shift: f64, source: SparseError },

    #[error("eigensolver did not converge after {restarts} restarts ({converged} of {requested} pairs converged)")]
    Unconverged {
        restarts: usize,
        converged: usize,
        requested: usize,
    },

    #[error("eigenvalue tracking failed: {0}")]
    Tracking(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error in {path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot serialize {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Unsupported(_) => "unsupported",
            Error::Assembly(_) => "assembly",
            Error::Sparse(_) => "sparse",
            Error::ShiftAtEigenvalue { .. } => "shift",
            Error::Unconverged { .. } => "unconverged",
            Error::Tracking(_) => "tracking",
            Error::InvalidInput(_) => "input",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::Context { source, .. } => source.category(),
        }
    }
}
