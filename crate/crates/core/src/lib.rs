//! Synthesized-image detection with bilateral high-pass filters.
//!
//! - [`numerics`]: rasters, 2D DFT, spectrum shifting, grayscale and resizing.
//! - [`bihpf`]: the pixel-level (LoG) and frequency-level high-pass filters and
//!   the preprocessing pipeline built from them.
//! - [`acm`]: the trainable artifact compression map, its add-on module and the
//!   two-step adversarial training that fits it.
//! - [`netlite`]: a small differentiable classifier with Adam.
//! - [`synthlab`]: procedural real/fake datasets with known upsampling artifacts.
//! - [`evalkit`]: accuracy, average precision and the cross-domain harness.
//! - [`io`]: PNM images, `F32T` tensors, run configs, manifests and CSV.

pub mod acm;
pub mod bihpf;
pub mod error;
pub mod evalkit;
pub mod io;
pub mod netlite;
pub mod numerics;
pub mod synthlab;

pub use error::{Error, Result};

/// Ground-truth class: `0` is real, `1` is fake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Real = 0,
    Fake = 1,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        self as u8 as f64
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Label::Real),
            1 => Ok(Label::Fake),
            other => Err(Error::InvalidParameter(format!(
                "label must be 0 or 1, got {other}"
            ))),
        }
    }
}
