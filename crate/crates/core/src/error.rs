use std::path::PathBuf;

/// Errors produced by the dehazing library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed image file: {0}")]
    Malformed(String),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),

    #[error("image has zero width or height")]
    ZeroSized,

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("image {width}x{height} is too small for {levels} pyramid level(s)")]
    TooSmall {
        width: usize,
        height: usize,
        levels: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sky mask is empty")]
    EmptyMask,

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short stable tag used in machine-readable CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Unreadable { .. } => "unreadable",
            Error::Unwritable { .. } => "unwritable",
            Error::Malformed(_) => "malformed",
            Error::UnsupportedFormat(_) => "unsupported_format",
            Error::UnsupportedBitDepth(_) => "unsupported_bit_depth",
            Error::ZeroSized => "zero_sized",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::TooSmall { .. } => "too_small",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::EmptyMask => "empty_mask",
            Error::Config { .. } => "config",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
