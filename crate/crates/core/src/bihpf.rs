//! Bilateral high-pass filtering of centered magnitude spectra.
//!
//! Two filters run in sequence on the centered magnitude spectrum of a
//! grayscale image:
//!
//! 1. a pixel-level high-pass: the spectrum is filtered with a Laplacian of
//!    Gaussian, implemented through its dual, an element-wise window
//!    `-(sigma r^2 / 2pi) exp(-(sigma r)^2 / 2)` applied in the pixel domain;
//! 2. a frequency-level ideal high-pass that zeroes every bin within radius
//!    `cutoff` of the spectrum center (the boundary circle included).
//!
//! The result is compressed with `ln(1 + v)` and scaled to unit RMS before it
//! reaches the classifier.

use std::borrow::Cow;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    dft2_in_place, fft2d, fftshift, ifftshift, magnitude, to_grayscale, Direction, GrayImage,
    MagnitudeMap, Planes, RealMap, RgbImage,
};

/// Scale of the Laplacian-of-Gaussian used by the pixel-level filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFilterSpec {
    sigma: f64,
}

impl LogFilterSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "LoG sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassBand {
    High,
    /// Keeps only the disk; used for cut-off ablations.
    Low,
}

/// Ideal radial filter in integer frequency-bin units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqHpfSpec {
    cutoff: f64,
    mode: PassBand,
}

impl FreqHpfSpec {
    pub fn new(cutoff: f64, mode: PassBand) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cut-off must be non-negative and finite, got {cutoff}"
            )));
        }
        Ok(Self { cutoff, mode })
    }

    pub fn high_pass(cutoff: f64) -> Result<Self> {
        Self::new(cutoff, PassBand::High)
    }

    pub fn low_pass(cutoff: f64) -> Result<Self> {
        Self::new(cutoff, PassBand::Low)
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn mode(&self) -> PassBand {
        self.mode
    }
}

/// Whether features are computed on luma or per RGB channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    Gray,
    Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BihpfConfig {
    pub log: LogFilterSpec,
    pub hpf: FreqHpfSpec,
    pub enable_pixel_hpf: bool,
    pub enable_freq_hpf: bool,
    pub color: ColorMode,
}

impl BihpfConfig {
    pub fn new(sigma: f64, cutoff: f64) -> Result<Self> {
        Ok(Self {
            log: LogFilterSpec::new(sigma)?,
            hpf: FreqHpfSpec::high_pass(cutoff)?,
            enable_pixel_hpf: true,
            enable_freq_hpf: true,
            color: ColorMode::Gray,
        })
    }

    /// Defaults for a 256x256 input.
    pub fn full_scale() -> Self {
        Self::new(0.01, 40.0).expect("valid defaults")
    }

    pub fn with_filters(mut self, pixel: bool, freq: bool) -> Self {
        self.enable_pixel_hpf = pixel;
        self.enable_freq_hpf = freq;
        self
    }

    pub fn with_color(mut self, color: ColorMode) -> Self {
        self.color = color;
        self
    }
}

/// Response of the LoG filter at radial frequency `omega`: `-sigma w^2 exp(-(sigma w)^2 / 2)`.
pub fn log_freq_response(sigma: f64, omega: f64) -> f64 {
    let s = sigma * omega;
    -sigma * omega * omega * (-0.5 * s * s).exp()
}

/// Pixel-domain dual of the LoG filter, evaluated on centered integer coordinates.
pub fn log_pixel_window(sigma: f64, height: usize, width: usize) -> RealMap {
    let (cy, cx) = ((height / 2) as f64, (width / 2) as f64);
    let mut data = Vec::with_capacity(height * width);
    for y in 0..height {
        for x in 0..width {
            let (dy, dx) = (y as f64 - cy, x as f64 - cx);
            let r2 = dy * dy + dx * dx;
            let s2 = sigma * sigma * r2;
            data.push(-(sigma * r2 / (2.0 * PI)) * (-0.5 * s2).exp());
        }
    }
    RealMap {
        height,
        width,
        data,
        centered: true,
    }
}

/// Filters a centered magnitude map with the LoG kernel via its pixel-domain window.
///
/// Equivalent to circularly convolving `mag` with `F{window} / (h w)` and
/// taking the modulus.
pub fn pixel_hpf(mag: &MagnitudeMap, spec: &LogFilterSpec) -> Result<MagnitudeMap> {
    if !mag.is_centered() {
        return Err(Error::NotCentered("pixel_hpf"));
    }
    let (h, w) = (mag.height(), mag.width());
    // window in DFT-native layout: value at wrapped coordinates
    let window = ifftshift(&log_pixel_window(spec.sigma, h, w));
    let mut buf: Vec<Complex64> = mag
        .as_slice()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    dft2_in_place(&mut buf, h, w, Direction::Inverse);
    for (z, wv) in buf.iter_mut().zip(&window.data) {
        *z *= *wv;
    }
    dft2_in_place(&mut buf, h, w, Direction::Forward);
    Ok(MagnitudeMap::from_parts_unchecked(
        h,
        w,
        buf.iter().map(|z| z.norm()).collect(),
        true,
    ))
}

/// `true` for bins with `w1^2 + w2^2 <= cutoff^2`, measured from the center of a centered grid.
pub fn cutoff_disk(height: usize, width: usize, cutoff: f64) -> Vec<bool> {
    let (cy, cx) = ((height / 2) as i64, (width / 2) as i64);
    let c2 = cutoff * cutoff;
    let mut out = Vec::with_capacity(height * width);
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            let (w2, w1) = (y - cy, x - cx);
            out.push(((w1 * w1 + w2 * w2) as f64) <= c2);
        }
    }
    out
}

/// Ideal radial filter on a centered magnitude map.
pub fn freq_hpf(mag: &MagnitudeMap, spec: &FreqHpfSpec) -> Result<MagnitudeMap> {
    if !mag.is_centered() {
        return Err(Error::NotCentered("freq_hpf"));
    }
    let disk = cutoff_disk(mag.height(), mag.width(), spec.cutoff);
    let zero_inside = spec.mode == PassBand::High;
    let data = mag
        .as_slice()
        .iter()
        .zip(&disk)
        .map(|(&v, &inside)| if inside == zero_inside { 0.0 } else { v })
        .collect();
    Ok(MagnitudeMap::from_parts_unchecked(
        mag.height(),
        mag.width(),
        data,
        true,
    ))
}

/// `ln(1 + v)` followed by scaling to unit RMS; an all-zero input stays zero.
pub fn normalize_features(values: &mut [f64]) {
    for v in values.iter_mut() {
        *v = v.ln_1p();
    }
    let n = values.len().max(1) as f64;
    let rms = (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    if rms > 1e-12 {
        for v in values.iter_mut() {
            *v /= rms;
        }
    }
}

/// Grayscale-convertible inputs of [`bihpf_pipeline`].
pub trait ToGray {
    fn to_gray(&self) -> Cow<'_, GrayImage>;
}

impl ToGray for GrayImage {
    fn to_gray(&self) -> Cow<'_, GrayImage> {
        Cow::Borrowed(self)
    }
}

impl ToGray for RgbImage {
    fn to_gray(&self) -> Cow<'_, GrayImage> {
        Cow::Owned(to_grayscale(self))
    }
}

/// Centered, filtered magnitude spectrum of one plane, before normalization.
pub fn filtered_spectrum(img: &GrayImage, cfg: &BihpfConfig) -> Result<MagnitudeMap> {
    let mut mag = fftshift(&magnitude(&fft2d(img)?));
    if cfg.enable_pixel_hpf {
        mag = pixel_hpf(&mag, &cfg.log)?;
    }
    if cfg.enable_freq_hpf {
        mag = freq_hpf(&mag, &cfg.hpf)?;
    }
    Ok(mag)
}

/// grayscale, FFT, modulus, shift, pixel HPF, frequency HPF, normalization.
pub fn bihpf_pipeline<I: ToGray + ?Sized>(img: &I, cfg: &BihpfConfig) -> Result<MagnitudeMap> {
    let mag = filtered_spectrum(&img.to_gray(), cfg)?;
    let (h, w) = (mag.height(), mag.width());
    let mut data = mag.into_vec();
    normalize_features(&mut data);
    Ok(MagnitudeMap::from_parts_unchecked(h, w, data, true))
}

/// Classifier input for an RGB image; honours `cfg.color`.
///
/// In RGB mode each channel is filtered separately and the three maps are
/// normalized jointly.
pub fn bihpf_features(img: &RgbImage, cfg: &BihpfConfig) -> Result<Planes> {
    match cfg.color {
        ColorMode::Gray => {
            let m = bihpf_pipeline(img, cfg)?;
            Planes::new(1, m.height(), m.width(), m.into_vec())
        }
        ColorMode::Rgb => {
            let (h, w) = (img.height(), img.width());
            let mut data = Vec::with_capacity(3 * h * w);
            for ch in img.channels() {
                data.extend(filtered_spectrum(&ch, cfg)?.into_vec());
            }
            normalize_features(&mut data);
            Planes::new(3, h, w, data)
        }
    }
}
