use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
///
/// Variants are grouped so callers (the CLI in particular) can map them to
/// coarse exit classes: [`Error::is_validation`] covers precondition and
/// tolerance failures, everything else is numerical or I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ordering parameter s = {s} outside the admissible range for {context}")]
    OrderingOutOfRange { s: f64, context: &'static str },

    #[error("truncation inadequate: tail mass {tail:.3e} exceeds {tol:.1e} at n_max = {n_max}")]
    Truncation { tail: f64, tol: f64, n_max: usize },

    #[error("dimension mismatch: expected n_max = {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("density matrix validation failed: {0}")]
    InvalidDensity(String),

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("symbolic error: {0}")]
    Symbolic(String),

    #[error("not simulable: {0}")]
    NotSimulable(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Precondition, tolerance or input-shape failures, as opposed to
    /// numerical breakdown or I/O.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NonFinite(_) | Error::Reconstruction(_) | Error::Io(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
