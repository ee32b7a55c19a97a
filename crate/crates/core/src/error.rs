use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad category of an [`Error`], used for process exit codes and the C status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// File system failure or a malformed input file.
    Input,
    /// Inputs were readable but violate a domain rule.
    Domain,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{path}: data file holds {actual} bytes, header implies {expected}")]
    SizeMismatch { path: PathBuf, expected: u64, actual: u64 },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("invalid spectral library: {0}")]
    InvalidLibrary(String),

    #[error("invalid label map: {0}")]
    InvalidLabels(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("wavelength {wavelength} nm is outside the support [{low}, {high}] of material '{material}'")]
    OutOfSupport {
        material: String,
        wavelength: f64,
        low: f64,
        high: f64,
    },

    #[error("class {0} has no material mapping")]
    UnmappedClass(u32),

    #[error("unknown material '{0}'")]
    UnknownMaterial(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no band falls inside [{low}, {high}] nm")]
    NoBandInRange { low: f64, high: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } | Error::Format { .. } | Error::SizeMismatch { .. } => ErrorKind::Input,
            _ => ErrorKind::Domain,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
