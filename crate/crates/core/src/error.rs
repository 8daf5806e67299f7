use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("png decode failed: {0}")]
    Png(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("empty box: {0}")]
    EmptyBox(String),
    #[error("footprint outside map bounds {width}x{height}")]
    FootprintOutOfBounds { width: u32, height: u32 },
    #[error("mixed image ids: {0} and {1}")]
    MixedImageIds(String, String),
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("normalized value outside [0,1]: {0}")]
    NormalizedOutOfRange(f64),
    #[error("unknown annotation format: {0}")]
    UnknownFormat(String),
    #[error("config: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Configuration and parameter errors, as opposed to per-item failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParam(_) | Error::UnknownFormat(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}
