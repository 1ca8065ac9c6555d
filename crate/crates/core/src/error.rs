use std::path::PathBuf;

use crate::spd::SpdMatrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the library.
///
/// Variants are grouped by [`ErrorCategory`] so front ends can map them onto
/// stable exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("eigendecomposition did not converge within {iterations} sweeps")]
    EigenNoConvergence { iterations: usize },

    #[error("Karcher mean did not converge after {iterations} iterations (residual {residual:e})")]
    KarcherNoConvergence {
        iterations: usize,
        residual: f64,
        last: Box<SpdMatrix>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training failed at epoch {epoch}, sample {sample}: {source}")]
    Training {
        epoch: usize,
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("run {run} failed: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification of [`Error`] values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Parse,
    Numerical,
    Io,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Validation(_) | Error::DimensionMismatch { .. } | Error::Config(_) => {
                ErrorCategory::Config
            }
            Error::Parse { .. } => ErrorCategory::Parse,
            Error::Domain(_)
            | Error::Numerical(_)
            | Error::EigenNoConvergence { .. }
            | Error::KarcherNoConvergence { .. } => ErrorCategory::Numerical,
            Error::Io { .. } => ErrorCategory::Io,
            Error::Training { source, .. } | Error::Run { source, .. } => source.category(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
