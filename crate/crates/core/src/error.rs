use std::path::PathBuf;

use thiserror::Error;

use crate::array::CoeffLayout;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("coefficient layout mismatch: expected {expected:?}, got {found:?}")]
    LayoutMismatch {
        expected: CoeffLayout,
        found: CoeffLayout,
    },

    #[error("invalid dimensions {rows}x{cols}")]
    InvalidDimensions { rows: usize, cols: usize },

    #[error("data length {len} does not match {expected} elements")]
    DataLength { len: usize, expected: usize },

    #[error("negative or non-finite value {value} at index {index}")]
    NotNonNegative { index: usize, value: f64 },

    #[error("logarithm of zero at index {0}")]
    LogOfZero(usize),

    #[error("kernel {kernel_rows}x{kernel_cols} does not fit image {rows}x{cols}")]
    KernelTooLarge {
        kernel_rows: usize,
        kernel_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("NMSE-optimal stopping requires a ground-truth image")]
    MissingGroundTruth,

    #[error("reference image is identically zero")]
    ZeroReference,

    #[error("empty input")]
    Empty,

    #[error("image {rows}x{cols} is smaller than the {window}x{window} window")]
    ImageTooSmall {
        rows: usize,
        cols: usize,
        window: usize,
    },

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}
