use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("degenerate embedding: all rows coincide (scale {scale:e})")]
    DegenerateEmbedding { scale: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("empty ensemble: need at least {needed} element(s), got {got}")]
    EmptyEnsemble { needed: usize, got: usize },

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("symmetric eigendecomposition did not converge (n = {n})")]
    EigenFailure { n: usize },

    #[error("{path}:{line}: cannot parse field {field:?}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
    },

    #[error("{path}:{line}: row has {found} columns, expected {expected}")]
    InconsistentWidth {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: non-finite value {field:?}")]
    NonFiniteValue {
        path: PathBuf,
        line: usize,
        field: String,
    },

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("reference target is not self-consistent: drift {drift:e} >= {limit:e}")]
    Calibration { drift: f64, limit: f64 },

    #[error("manifest entry {index} ({path}): {source}")]
    Entry {
        index: usize,
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable category, printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidEmbedding(_) => "invalid-embedding",
            Error::DegenerateEmbedding { .. } => "degenerate-embedding",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::EmptyEnsemble { .. } => "empty-ensemble",
            Error::InvalidMatrix(_) => "invalid-matrix",
            Error::InvalidConfig(_) => "invalid-config",
            Error::EigenFailure { .. } => "eigen-failure",
            Error::Parse { .. } => "parse-error",
            Error::InconsistentWidth { .. } => "inconsistent-width",
            Error::NonFiniteValue { .. } => "non-finite-value",
            Error::Manifest { .. } => "manifest",
            Error::Calibration { .. } => "calibration",
            Error::Entry { source, .. } => source.category(),
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
