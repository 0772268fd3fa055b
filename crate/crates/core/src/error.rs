use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// Each variant belongs to one [`ErrorKind`], which the command-line driver
/// maps onto its exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed graymap header: {0}")]
    MalformedHeader(String),

    #[error("unsupported graymap maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),

    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("iris annulus contains no pixels")]
    EmptyAnnulus,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("manifest line {line}: {message}")]
    ManifestParse { line: usize, message: String },

    #[error("duplicate sample_id `{0}`")]
    DuplicateSampleId(String),

    #[error("class `{0}` has no enrollment record")]
    MissingEnrollment(String),

    #[error("class `{class_id}` has {count} enrollment records")]
    MultipleEnrollments { class_id: String, count: usize },

    #[error("all-zero heatmap")]
    ZeroHeatmap,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing value: {0}")]
    MissingValue(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Coarse classification of [`Error`] values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::MissingFile(_) | Error::Io { .. } => ErrorKind::Io,
            Error::NonFinite(_) | Error::UndefinedCorrelation(_) => ErrorKind::Numeric,
            _ => ErrorKind::Validation,
        }
    }

    /// I/O failure on `path`; a missing file gets its own variant.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
