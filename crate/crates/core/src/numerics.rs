//! Raster containers and the 2D Fourier machinery shared by every other module.
//!
//! Conventions:
//! - rasters are row-major, `data[y * width + x]`;
//! - the forward DFT is unnormalized, the inverse carries the `1/(h*w)` factor;
//! - a "centered" map has its origin at `(h/2, w/2)` (integer division), as
//!   produced by [`fftshift`].

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_finite, shape_err, Error, Result};

/// Single-channel image, values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(shape_err(
                format!("{height}x{width} = {} values", height * width),
                format!("{} values", data.len()),
            ));
        }
        check_finite("GrayImage", &data)?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

/// Three-channel image, channels interleaved per pixel (`R, G, B`).
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 3 * height * width {
            return Err(shape_err(
                format!("3x{height}x{width} = {} values", 3 * height * width),
                format!("{} values", data.len()),
            ));
        }
        check_finite("RgbImage", &data)?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_channels(r: &GrayImage, g: &GrayImage, b: &GrayImage) -> Result<Self> {
        let (h, w) = (r.height, r.width);
        for c in [g, b] {
            if c.height != h || c.width != w {
                return Err(shape_err(
                    format!("{h}x{w}"),
                    format!("{}x{}", c.height, c.width),
                ));
            }
        }
        let mut data = Vec::with_capacity(3 * h * w);
        for i in 0..h * w {
            data.extend_from_slice(&[r.data[i], g.data[i], b.data[i]]);
        }
        Ok(Self {
            height: h,
            width: w,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f64; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, y: usize, x: usize, rgb: [f64; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> GrayImage {
        assert!(c < 3, "channel index {c} out of range");
        GrayImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().skip(c).step_by(3).copied().collect(),
        }
    }

    pub fn channels(&self) -> [GrayImage; 3] {
        [self.channel(0), self.channel(1), self.channel(2)]
    }

    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

/// Channel-major stack of equally sized real planes; the classifier's input type.
#[derive(Debug, Clone, PartialEq)]
pub struct Planes {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Planes {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(shape_err(
                format!("{channels}x{height}x{width}"),
                format!("{} values", data.len()),
            ));
        }
        check_finite("Planes", &data)?;
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            channels: 1,
            height: img.height,
            width: img.width,
            data: img.data.clone(),
        }
    }

    pub fn from_rgb(img: &RgbImage) -> Self {
        let mut data = Vec::with_capacity(img.data.len());
        for c in 0..3 {
            data.extend(img.data.iter().skip(c).step_by(3));
        }
        Self {
            channels: 3,
            height: img.height,
            width: img.width,
            data,
        }
    }

    pub fn from_planes(planes: &[GrayImage]) -> Result<Self> {
        let first = planes.first().ok_or(Error::Empty("plane list"))?;
        let (h, w) = (first.height, first.width);
        let mut data = Vec::with_capacity(planes.len() * h * w);
        for p in planes {
            if p.height != h || p.width != w {
                return Err(shape_err(
                    format!("{h}x{w}"),
                    format!("{}x{}", p.height, p.width),
                ));
            }
            data.extend_from_slice(&p.data);
        }
        Ok(Self {
            channels: planes.len(),
            height: h,
            width: w,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_image(&self, c: usize) -> GrayImage {
        GrayImage {
            height: self.height,
            width: self.width,
            data: self.plane(c).to_vec(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }
}

/// Complex frequency map.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub height: usize,
    pub width: usize,
    pub data: Vec<Complex64>,
    pub centered: bool,
}

impl Spectrum {
    pub fn new(height: usize, width: usize, data: Vec<Complex64>, centered: bool) -> Result<Self> {
        if data.len() != height * width {
            return Err(shape_err(
                format!("{height}x{width}"),
                format!("{} values", data.len()),
            ));
        }
        if let Some(index) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                what: "Spectrum",
                index,
            });
        }
        Ok(Self {
            height,
            width,
            data,
            centered,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![Complex64::new(0.0, 0.0); height * width],
            centered: false,
        }
    }

    pub fn get(&self, y: usize, x: usize) -> Complex64 {
        self.data[y * self.width + x]
    }
}

/// Non-negative real frequency map, typically the modulus of a [`Spectrum`].
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
    centered: bool,
}

impl MagnitudeMap {
    pub fn new(height: usize, width: usize, data: Vec<f64>, centered: bool) -> Result<Self> {
        if data.len() != height * width {
            return Err(shape_err(
                format!("{height}x{width}"),
                format!("{} values", data.len()),
            ));
        }
        check_finite("MagnitudeMap", &data)?;
        if let Some(i) = data.iter().position(|v| *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "magnitude map value {} at index {i} is negative",
                data[i]
            )));
        }
        Ok(Self {
            height,
            width,
            data,
            centered,
        })
    }

    pub(crate) fn from_parts_unchecked(
        height: usize,
        width: usize,
        data: Vec<f64>,
        centered: bool,
    ) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self {
            height,
            width,
            data,
            centered,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Reinterprets the map as a real-valued spectrum (zero imaginary part).
    pub fn to_spectrum(&self) -> Spectrum {
        Spectrum {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
            centered: self.centered,
        }
    }
}

/// Signed real map with an explicit layout flag (windows, display maps).
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
    pub centered: bool,
}

impl RealMap {
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Quadrant swap: moves the DFT origin to `(h/2, w/2)`.
pub trait FftShift: Sized {
    fn fftshift(&self) -> Self;
    fn ifftshift(&self) -> Self;
}

/// Cyclic roll of a row-major grid: `out[(y + dy) % h][(x + dx) % w] = in[y][x]`.
pub fn roll<T: Copy>(data: &[T], height: usize, width: usize, dy: usize, dx: usize) -> Vec<T> {
    assert_eq!(data.len(), height * width);
    if data.is_empty() {
        return Vec::new();
    }
    let mut out = data.to_vec();
    for y in 0..height {
        let oy = (y + dy) % height;
        for x in 0..width {
            out[oy * width + (x + dx) % width] = data[y * width + x];
        }
    }
    out
}

fn shift_fwd<T: Copy>(data: &[T], h: usize, w: usize) -> Vec<T> {
    roll(data, h, w, h / 2, w / 2)
}

fn shift_inv<T: Copy>(data: &[T], h: usize, w: usize) -> Vec<T> {
    roll(data, h, w, h - h / 2, w - w / 2)
}

impl FftShift for Spectrum {
    fn fftshift(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: shift_fwd(&self.data, self.height, self.width),
            centered: !self.centered,
        }
    }

    fn ifftshift(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: shift_inv(&self.data, self.height, self.width),
            centered: !self.centered,
        }
    }
}

impl FftShift for MagnitudeMap {
    fn fftshift(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: shift_fwd(&self.data, self.height, self.width),
            centered: !self.centered,
        }
    }

    fn ifftshift(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: shift_inv(&self.data, self.height, self.width),
            centered: !self.centered,
        }
    }
}

impl FftShift for RealMap {
    fn fftshift(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: shift_fwd(&self.data, self.height, self.width),
            centered: !self.centered,
        }
    }

    fn ifftshift(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: shift_inv(&self.data, self.height, self.width),
            centered: !self.centered,
        }
    }
}

pub fn fftshift<M: FftShift>(m: &M) -> M {
    m.fftshift()
}

pub fn ifftshift<M: FftShift>(m: &M) -> M {
    m.ifftshift()
}

/// Transform direction for [`dft2_in_place`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    /// Inverse transform including the `1/(h*w)` normalization.
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match direction {
            Direction::Forward => p.plan_fft_forward(len),
            Direction::Inverse => p.plan_fft_inverse(len),
        }
    })
}

/// Separable 2D DFT over a row-major complex buffer.
///
/// Arbitrary sizes are supported (rustfft picks mixed-radix or Bluestein plans).
pub fn dft2_in_place(buf: &mut [Complex64], height: usize, width: usize, direction: Direction) {
    assert_eq!(buf.len(), height * width, "buffer does not match {height}x{width}");
    if buf.is_empty() {
        return;
    }
    if width > 1 {
        plan(width, direction).process(buf);
    }
    if height > 1 {
        let mut cols = vec![Complex64::new(0.0, 0.0); buf.len()];
        for y in 0..height {
            for x in 0..width {
                cols[x * height + y] = buf[y * width + x];
            }
        }
        plan(height, direction).process(&mut cols);
        for y in 0..height {
            for x in 0..width {
                buf[y * width + x] = cols[x * height + y];
            }
        }
    }
    if direction == Direction::Inverse {
        let scale = 1.0 / (height * width) as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }
}

/// Unnormalized forward 2D DFT of a real image.
pub fn fft2d(img: &GrayImage) -> Result<Spectrum> {
    if img.height == 0 || img.width == 0 {
        return Err(Error::Empty("fft2d input"));
    }
    check_finite("fft2d input", &img.data)?;
    let mut buf: Vec<Complex64> = img.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft2_in_place(&mut buf, img.height, img.width, Direction::Forward);
    Ok(Spectrum {
        height: img.height,
        width: img.width,
        data: buf,
        centered: false,
    })
}

/// Inverse 2D DFT keeping only the real part.
pub fn ifft2d(spec: &Spectrum) -> Result<GrayImage> {
    ifft2d_with_residual(spec).map(|(img, _)| img)
}

/// Inverse 2D DFT; also returns the L2 norm of the discarded imaginary part.
pub fn ifft2d_with_residual(spec: &Spectrum) -> Result<(GrayImage, f64)> {
    if spec.centered {
        return Err(Error::Centered("ifft2d"));
    }
    let mut buf = spec.data.clone();
    dft2_in_place(&mut buf, spec.height, spec.width, Direction::Inverse);
    let residual = buf.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    let img = GrayImage {
        height: spec.height,
        width: spec.width,
        data: buf.iter().map(|z| z.re).collect(),
    };
    Ok((img, residual))
}

pub fn magnitude(spec: &Spectrum) -> MagnitudeMap {
    MagnitudeMap {
        height: spec.height,
        width: spec.width,
        data: spec.data.iter().map(|z| z.norm()).collect(),
        centered: spec.centered,
    }
}

pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// BT.601 luma.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    GrayImage {
        height: img.height,
        width: img.width,
        data: img
            .data
            .chunks_exact(3)
            .map(|p| wr * p[0] + wg * p[1] + wb * p[2])
            .collect(),
    }
}

/// Images that can be resampled with [`resize_bilinear`].
pub trait Resample: Sized {
    fn resize_bilinear(&self, out_h: usize, out_w: usize) -> Result<Self>;
}

fn bilinear_plane(src: &[f64], h: usize, w: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    // half-pixel centers: src = (dst + 0.5) * in/out - 0.5, clamped to the edge
    let coords = |n_in: usize, n_out: usize| -> Vec<(usize, usize, f64)> {
        let scale = n_in as f64 / n_out as f64;
        (0..n_out)
            .map(|d| {
                let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(n_in - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let ys = coords(h, out_h);
    let xs = coords(w, out_w);
    let mut out = Vec::with_capacity(out_h * out_w);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            let bot = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    out
}

impl Resample for GrayImage {
    fn resize_bilinear(&self, out_h: usize, out_w: usize) -> Result<Self> {
        if out_h == 0 || out_w == 0 {
            return Err(Error::InvalidParameter(format!(
                "resize target {out_h}x{out_w} must be at least 1x1"
            )));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::Empty("resize input"));
        }
        if (out_h, out_w) == (self.height, self.width) {
            return Ok(self.clone());
        }
        Ok(Self {
            height: out_h,
            width: out_w,
            data: bilinear_plane(&self.data, self.height, self.width, out_h, out_w),
        })
    }
}

impl Resample for RgbImage {
    fn resize_bilinear(&self, out_h: usize, out_w: usize) -> Result<Self> {
        if (out_h, out_w) == (self.height, self.width) {
            return Ok(self.clone());
        }
        let [r, g, b] = self.channels();
        Self::from_channels(
            &r.resize_bilinear(out_h, out_w)?,
            &g.resize_bilinear(out_h, out_w)?,
            &b.resize_bilinear(out_h, out_w)?,
        )
    }
}

pub fn resize_bilinear<I: Resample>(img: &I, out_h: usize, out_w: usize) -> Result<I> {
    img.resize_bilinear(out_h, out_w)
}
