use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({x}, {y}, {t}) outside stream of {width}x{height}x{length}")]
    OutOfBounds {
        x: usize,
        y: usize,
        t: usize,
        width: usize,
        height: usize,
        length: usize,
    },

    #[error("window [{start}, {end}) does not overlap the stream of length {length}")]
    EmptyWindow { start: i64, end: i64, length: usize },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("calibration quality: {masked} of {total} pixels masked (limit {limit:.0}%)")]
    CalibrationQuality {
        masked: usize,
        total: usize,
        limit: f64,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
