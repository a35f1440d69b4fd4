use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value at index {index} in {what}")]
    NonFinite { what: &'static str, index: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} requires a centered map")]
    NotCentered(&'static str),

    #[error("{0} requires a non-centered (DFT-native) spectrum; apply ifftshift first")]
    Centered(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("training diverged at epoch {epoch}, step {step}: {detail}")]
    Diverged {
        epoch: usize,
        step: usize,
        detail: String,
    },

    #[error("backward called without a cached forward pass")]
    NoForwardCache,

    #[error("malformed PNM header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),

    #[error("bad magic: expected F32T")]
    BadMagic,

    #[error("payload mismatch: dims imply {expected} floats, found {found}")]
    PayloadMismatch { expected: usize, found: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("manifest error in {path}: {detail}")]
    Manifest { path: PathBuf, detail: String },

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_finite(what: &'static str, data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

pub(crate) fn shape_err(expected: impl Into<String>, got: impl Into<String>) -> Error {
    Error::Shape {
        expected: expected.into(),
        got: got.into(),
    }
}
