use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("pfm load error at byte {offset}: {message}")]
    Pfm { offset: usize, message: String },

    #[error("png error: {0}")]
    Png(String),

    #[error("unsupported color type: {0}")]
    UnsupportedColorType(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("duplicate exposure {0} ms in manifest")]
    DuplicateExposure(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate pixel: s0 = {0} is not positive")]
    DegeneratePixel(f64),

    #[error("crf recovery failed: {0}")]
    CrfRecovery(String),

    #[error("empty input: {0}")]
    Empty(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Pfm { .. } => "pfm",
            Error::Png(_) => "png",
            Error::UnsupportedColorType(_) => "png",
            Error::Manifest(_) => "manifest",
            Error::DuplicateExposure(_) => "manifest",
            Error::DimensionMismatch(_) => "dimension",
            Error::InvalidInput(_) => "input",
            Error::DegeneratePixel(_) => "degenerate",
            Error::CrfRecovery(_) => "crf",
            Error::Empty(_) => "empty",
        }
    }
}
