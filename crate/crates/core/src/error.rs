use std::path::PathBuf;

/// Errors raised anywhere in the metric pipeline.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum VdpError {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("calibration file is missing key `{0}`")]
    MissingKey(String),

    #[error("calibration key `{key}` is not a number: {message}")]
    MalformedValue { key: String, message: String },

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("value {value} outside the allowed range {range}")]
    OutOfRange { value: f64, range: &'static str },

    #[error("image {width}x{height} is too small: {reason}")]
    TooSmall {
        width: usize,
        height: usize,
        reason: String,
    },

    #[error("task mismatch: {0}")]
    TaskMismatch(String),

    #[error("frame encoding {frame} does not match the display EOTF {display}")]
    EncodingMismatch { frame: &'static str, display: &'static str },

    #[error("no frames selected: {0}")]
    EmptySelection(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl VdpError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        VdpError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tools.
    ///
    /// 1 usage/configuration, 2 I/O, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            VdpError::Io { .. } | VdpError::Decode { .. } | VdpError::UnsupportedFormat(_) => 2,
            VdpError::Numeric(_) | VdpError::ZeroVariance(_) | VdpError::InsufficientData(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = VdpError> = std::result::Result<T, E>;
