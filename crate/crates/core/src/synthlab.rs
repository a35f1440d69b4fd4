//! Procedural real/fake datasets with known upsampling artifacts.
//!
//! A "real" image is a supersampled render of a few category shapes over a
//! 1/f colored-noise background. The matching "fake" renders the same scene
//! (same content seed) at half resolution and upsamples it ×2 with one of
//! three generator families, which places spectral replicas of the baseband
//! in the high-frequency bins. Those replica bins are the ground-truth
//! artifact mask.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{dft2_in_place, Direction, GrayImage, RgbImage};
use crate::Label;

const SUPERSAMPLE: usize = 4;
/// Side tap of the transposed-conv-like kernel; 0.5 would be bilinear.
const ZI_SIDE: f64 = 0.45;
/// Upper bound of the per-image output noise level.
const MAX_NOISE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Disks,
    Rectangles,
    Rings,
    Blobs,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Disks,
        Category::Rectangles,
        Category::Rings,
        Category::Blobs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Disks => "disks",
            Category::Rectangles => "rectangles",
            Category::Rings => "rings",
            Category::Blobs => "blobs",
        }
    }

    /// Hue range of the category's shape palette.
    fn hue_range(self) -> (f64, f64) {
        match self {
            Category::Disks => (0.95, 1.07),
            Category::Rectangles => (0.25, 0.38),
            Category::Rings => (0.55, 0.68),
            Category::Blobs => (0.08, 0.16),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown category '{s}'")))
    }
}

/// ×2 upsampler family used to synthesize fakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    Nearest,
    Bilinear,
    /// Zero insertion followed by an uneven 3-tap kernel, like a stride-2
    /// transposed convolution; leaves a checkerboard.
    ZeroInsert,
}

impl Generator {
    pub const ALL: [Generator; 3] = [Generator::Nearest, Generator::Bilinear, Generator::ZeroInsert];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Nearest => "nearest",
            Generator::Bilinear => "bilinear",
            Generator::ZeroInsert => "zero-insert",
        }
    }

    /// Separable interpolation taps at offsets `-1, 0, 1` applied after zero insertion.
    fn taps(self) -> [f64; 3] {
        match self {
            Generator::Nearest => [0.0, 1.0, 1.0],
            Generator::Bilinear => [0.5, 1.0, 0.5],
            Generator::ZeroInsert => [ZI_SIDE, 2.0 - 2.0 * ZI_SIDE, ZI_SIDE],
        }
    }

    pub fn upsample(self, img: &GrayImage) -> GrayImage {
        interpolate(&zero_insert_upsample(img), self.taps())
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown generator '{s}'")))
    }
}

/// `y[2i, 2j] = x[i, j]`, zero elsewhere.
pub fn zero_insert_upsample(img: &GrayImage) -> GrayImage {
    let (h, w) = (img.height(), img.width());
    let mut out = GrayImage::zeros(2 * h, 2 * w);
    let s = out.as_mut_slice();
    for y in 0..h {
        for x in 0..w {
            s[2 * y * 2 * w + 2 * x] = img.get(y, x);
        }
    }
    out
}

/// Separable circular convolution with taps at offsets `-1, 0, 1`.
fn interpolate(img: &GrayImage, taps: [f64; 3]) -> GrayImage {
    let (h, w) = (img.height(), img.width());
    let rows = GrayImage::from_fn(h, w, |y, x| {
        taps[0] * img.get(y, (x + 1) % w)
            + taps[1] * img.get(y, x)
            + taps[2] * img.get(y, (x + w - 1) % w)
    });
    GrayImage::from_fn(h, w, |y, x| {
        taps[0] * rows.get((y + 1) % h, x)
            + taps[1] * rows.get(y, x)
            + taps[2] * rows.get((y + h - 1) % h, x)
    })
}

/// Mean over non-overlapping 2×2 blocks.
pub fn area_downsample(img: &GrayImage) -> Result<GrayImage> {
    let (h, w) = (img.height(), img.width());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "size {h}x{w} not divisible by 2"
        )));
    }
    Ok(GrayImage::from_fn(h / 2, w / 2, |y, x| {
        0.25 * (img.get(2 * y, 2 * x)
            + img.get(2 * y, 2 * x + 1)
            + img.get(2 * y + 1, 2 * x)
            + img.get(2 * y + 1, 2 * x + 1))
    }))
}

/// Bins (DFT-native order) that hold replicas of the half-resolution baseband:
/// `|w1| >= N/4` or `|w2| >= N/4`. The same for every generator family.
pub fn artifact_mask(height: usize, width: usize) -> Vec<bool> {
    let band = |k: usize, n: usize| 4 * k.min(n - k) >= n;
    let mut out = Vec::with_capacity(height * width);
    for v in 0..height {
        for u in 0..width {
            out.push(band(v, height) || band(u, width));
        }
    }
    out
}

/// Deterministic seed mixing (splitmix64 finalizer).
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z = z
            .wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(p.wrapping_mul(0xbf58_476d_1ce4_e5b9));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Zero-mean, unit-std field with `1/f` amplitude spectrum.
fn pink_noise(size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); size * size];
    for v in 0..size {
        for u in 0..size {
            let (fv, fu) = (v.min(size - v) as f64, u.min(size - u) as f64);
            let r = (fv * fv + fu * fu).sqrt();
            if r > 0.0 {
                let phase = rng.gen::<f64>() * std::f64::consts::TAU;
                buf[v * size + u] = Complex64::from_polar(1.0 / r, phase);
            }
        }
    }
    dft2_in_place(&mut buf, size, size, Direction::Inverse);
    let vals: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    vals.iter().map(|v| (v - mean) / std.max(1e-12)).collect()
}

enum Shape {
    Disk { cx: f64, cy: f64, r: f64 },
    Rect { cx: f64, cy: f64, hw: f64, hh: f64, cos: f64, sin: f64 },
    Ring { cx: f64, cy: f64, r_out: f64, r_in: f64 },
    Blob { cx: f64, cy: f64, r: f64, harmonics: [(f64, f64, f64); 3] },
}

impl Shape {
    fn random(category: Category, size: f64, rng: &mut ChaCha8Rng) -> Self {
        let cx = size * rng.gen_range(0.32..0.68);
        let cy = size * rng.gen_range(0.32..0.68);
        match category {
            Category::Disks => Shape::Disk {
                cx,
                cy,
                r: size * rng.gen_range(0.07..0.16),
            },
            Category::Rectangles => {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                Shape::Rect {
                    cx,
                    cy,
                    hw: size * rng.gen_range(0.05..0.15),
                    hh: size * rng.gen_range(0.05..0.15),
                    cos: a.cos(),
                    sin: a.sin(),
                }
            }
            Category::Rings => {
                let r_out = size * rng.gen_range(0.09..0.17);
                Shape::Ring {
                    cx,
                    cy,
                    r_out,
                    r_in: r_out * rng.gen_range(0.45..0.7),
                }
            }
            Category::Blobs => {
                let mut harmonics = [(0.0, 0.0, 0.0); 3];
                for (k, hm) in harmonics.iter_mut().enumerate() {
                    *hm = (
                        (k + 2) as f64,
                        rng.gen_range(0.05..0.25) / (k + 1) as f64,
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    );
                }
                Shape::Blob {
                    cx,
                    cy,
                    r: size * rng.gen_range(0.08..0.15),
                    harmonics,
                }
            }
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Disk { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Shape::Rect {
                cx,
                cy,
                hw,
                hh,
                cos,
                sin,
            } => {
                let (dx, dy) = (x - cx, y - cy);
                (dx * cos + dy * sin).abs() <= hw && (-dx * sin + dy * cos).abs() <= hh
            }
            Shape::Ring { cx, cy, r_out, r_in } => {
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                d2 <= r_out * r_out && d2 >= r_in * r_in
            }
            Shape::Blob {
                cx,
                cy,
                r,
                harmonics,
            } => {
                let (dx, dy) = (x - cx, y - cy);
                let theta = dy.atan2(dx);
                let scale: f64 = 1.0
                    + harmonics
                        .iter()
                        .map(|(k, a, p)| a * (k * theta + p).sin())
                        .sum::<f64>();
                dx * dx + dy * dy <= (r * scale).powi(2)
            }
        }
    }
}

/// Full-resolution real scene for `category`, deterministic in `seed`.
///
/// Bright 1/f background; 1–4 darker shapes from the category palette near
/// the center; pixel values stay within `[0, 1]`.
pub fn render_scene(category: Category, size: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = pink_noise(size, &mut rng);
    let base = rng.gen_range(0.55..0.68);
    let tint = [
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-0.05..0.05),
    ];
    let amp = rng.gen_range(0.06..0.1);

    let n_shapes = rng.gen_range(1..=4);
    let (h_lo, h_hi) = category.hue_range();
    let shapes: Vec<(Shape, [f64; 3])> = (0..n_shapes)
        .map(|_| {
            let shape = Shape::random(category, size as f64, &mut rng);
            let hue = rng.gen_range(h_lo..h_hi).rem_euclid(1.0);
            let sat = rng.gen_range(0.55..0.9);
            let val = rng.gen_range(0.22..0.42);
            (shape, hsv_to_rgb([hue, sat, val]))
        })
        .collect();

    let mut out = RgbImage::new(size, size, vec![0.0; 3 * size * size]).expect("sized buffer");
    let step = 1.0 / SUPERSAMPLE as f64;
    let samples = (SUPERSAMPLE * SUPERSAMPLE) as f64;
    for y in 0..size {
        for x in 0..size {
            let n = noise[y * size + x];
            let mut px = [0.0; 3];
            for c in 0..3 {
                px[c] = base + tint[c] + amp * n;
            }
            for (shape, color) in &shapes {
                let mut hits = 0usize;
                for sy in 0..SUPERSAMPLE {
                    for sx in 0..SUPERSAMPLE {
                        let fx = x as f64 + (sx as f64 + 0.5) * step;
                        let fy = y as f64 + (sy as f64 + 0.5) * step;
                        if shape.contains(fx, fy) {
                            hits += 1;
                        }
                    }
                }
                let alpha = hits as f64 / samples;
                for c in 0..3 {
                    // keep a trace of the background texture inside shapes
                    let fill = color[c] + 0.3 * amp * n;
                    px[c] = (1.0 - alpha) * px[c] + alpha * fill;
                }
            }
            out.set_pixel(y, x, px);
        }
    }
    out.clamp_unit();
    out
}

/// Output-stage noise shared by real and fake renders of one content seed.
///
/// Gaussian, per-image level uniform in `[0, MAX_NOISE)`; clamped to `[0, 1]`.
pub fn finish(img: &RgbImage, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x6e6f]));
    let level = rng.gen::<f64>() * MAX_NOISE;
    let noisy: Vec<f64> = img
        .as_slice()
        .iter()
        .map(|v| v + level * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut out = RgbImage::new(img.height(), img.width(), noisy).expect("same dims");
    out.clamp_unit();
    out
}

/// Finished real image for a content seed.
pub fn render_real(category: Category, size: usize, seed: u64) -> RgbImage {
    finish(&render_scene(category, size, seed), seed)
}

/// Half-resolution render of the same scene, upsampled ×2 by `generator`, then finished.
pub fn render_fake(category: Category, generator: Generator, size: usize, seed: u64) -> Result<RgbImage> {
    let scene = render_scene(category, size, seed);
    Ok(finish(&synthesize_fake(&scene, generator)?, seed))
}

/// Downsample ×2 by block averaging, then upsample with `generator`.
pub fn synthesize_fake(real: &RgbImage, generator: Generator) -> Result<RgbImage> {
    let [r, g, b] = real.channels();
    let up = |c: &GrayImage| -> Result<GrayImage> { Ok(generator.upsample(&area_downsample(c)?)) };
    let mut out = RgbImage::from_channels(&up(&r)?, &up(&g)?, &up(&b)?)?;
    out.clamp_unit();
    Ok(out)
}

/// What to generate: one category, one generator family, `count` images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub category: Category,
    pub generator: Generator,
    pub size: usize,
    pub seed: u64,
    pub count: usize,
}

impl GenSpec {
    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("count must be >= 1".into()));
        }
        if self.size < 4 || self.size % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "size must be even and >= 4, got {}",
                self.size
            )));
        }
        Ok(())
    }

    /// Content seed of image `i`; shared by the real and the fake render.
    pub fn content_seed(&self, i: usize) -> u64 {
        derive_seed(self.seed, &[self.category as u64, i as u64])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub image: RgbImage,
    pub label: Label,
    pub category: Category,
    /// `None` for real images.
    pub generator: Option<Generator>,
}

impl Record {
    pub fn generator_tag(&self) -> &'static str {
        self.generator.map_or("real", Generator::name)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub records: Vec<Record>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(real, fake)` counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let fakes = self.records.iter().filter(|r| r.label == Label::Fake).count();
        (self.records.len() - fakes, fakes)
    }

    pub fn extend(&mut self, other: LabeledDataset) {
        self.records.extend(other.records);
    }

    /// Ground-truth artifact bins for the dataset's image size.
    pub fn artifact_mask(&self) -> Option<Vec<bool>> {
        self.records
            .first()
            .map(|r| artifact_mask(r.image.height(), r.image.width()))
    }

    pub fn map_images(&self, f: impl Fn(&RgbImage) -> RgbImage) -> Self {
        Self {
            records: self
                .records
                .iter()
                .map(|r| Record {
                    image: f(&r.image),
                    ..r.clone()
                })
                .collect(),
        }
    }
}

pub fn gen_real(spec: &GenSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let records = (0..spec.count)
        .map(|i| Record {
            image: render_real(spec.category, spec.size, spec.content_seed(i)),
            label: Label::Real,
            category: spec.category,
            generator: None,
        })
        .collect();
    Ok(LabeledDataset { records })
}

pub fn gen_fake(spec: &GenSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let records = (0..spec.count)
        .map(|i| {
            Ok(Record {
                image: render_fake(spec.category, spec.generator, spec.size, spec.content_seed(i))?,
                label: Label::Fake,
                category: spec.category,
                generator: Some(spec.generator),
            })
        })
        .collect::<Result<_>>()?;
    Ok(LabeledDataset { records })
}

/// Balanced set: `count` reals and `count` fakes, pairwise sharing content.
pub fn gen_balanced(spec: &GenSpec) -> Result<LabeledDataset> {
    let mut ds = gen_real(spec)?;
    ds.extend(gen_fake(spec)?);
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorKind {
    Hue,
    Brightness,
    Saturation,
    Gamma,
    Contrast,
}

impl ColorKind {
    pub const ALL: [ColorKind; 5] = [
        ColorKind::Hue,
        ColorKind::Brightness,
        ColorKind::Saturation,
        ColorKind::Gamma,
        ColorKind::Contrast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ColorKind::Hue => "hue",
            ColorKind::Brightness => "brightness",
            ColorKind::Saturation => "saturation",
            ColorKind::Gamma => "gamma",
            ColorKind::Contrast => "contrast",
        }
    }
}

impl FromStr for ColorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ColorKind::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown color op '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorOp {
    pub kind: ColorKind,
    pub amount: f64,
}

impl ColorOp {
    /// Hue shift by 0.2 of a turn; other kinds adjusted by 1.3.
    pub fn standard(kind: ColorKind) -> Self {
        let amount = if kind == ColorKind::Hue { 0.2 } else { 1.3 };
        Self { kind, amount }
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.kind.name(), self.amount)
    }
}

pub fn rgb_to_hsv([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / d).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / d + 2.0) / 6.0
    } else {
        ((r - g) / d + 4.0) / 6.0
    };
    let s = if max > 0.0 { d / max } else { 0.0 };
    [h, s, max]
}

pub fn hsv_to_rgb([h, s, v]: [f64; 3]) -> [f64; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let c = v * s;
    let x = c * (1.0 - (h6 % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h6 as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Table-style color manipulation; every output channel is clamped to `[0, 1]`.
pub fn apply_color(img: &RgbImage, op: ColorOp) -> RgbImage {
    let a = op.amount;
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let p = img.pixel(y, x);
            let q = match op.kind {
                ColorKind::Hue => {
                    let [h, s, v] = rgb_to_hsv(p);
                    hsv_to_rgb([(h + a).rem_euclid(1.0), s, v])
                }
                ColorKind::Brightness => {
                    let [h, s, v] = rgb_to_hsv(p);
                    hsv_to_rgb([h, s, (v * a).clamp(0.0, 1.0)])
                }
                ColorKind::Saturation => {
                    let [h, s, v] = rgb_to_hsv(p);
                    hsv_to_rgb([h, (s * a).clamp(0.0, 1.0), v])
                }
                ColorKind::Gamma => p.map(|c| c.max(0.0).powf(a)),
                ColorKind::Contrast => p.map(|c| 0.5 + (c - 0.5) * a),
            };
            out.set_pixel(y, x, q.map(|c| c.clamp(0.0, 1.0)));
        }
    }
    out
}

/// Evaluation protocol.
#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    /// Train on one category, test on each listed category.
    CrossCategory {
        train: Category,
        test: Vec<Category>,
        generator: Generator,
    },
    /// Train on one category; test on untouched and color-manipulated copies.
    CrossColor {
        category: Category,
        generator: Generator,
        ops: Vec<ColorOp>,
    },
    /// Train on one generator family, test on each listed family.
    CrossModel {
        category: Category,
        train: Generator,
        test: Vec<Generator>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub size: usize,
    /// Images per class in the training split.
    pub train_per_class: usize,
    /// Images per class in each test domain.
    pub test_per_class: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Cross-category protocol over all categories, zero-insert fakes.
    pub fn cross_category(train: Category, size: usize, per_class: usize, seed: u64) -> Self {
        Self {
            protocol: Protocol::CrossCategory {
                train,
                test: Category::ALL.to_vec(),
                generator: Generator::ZeroInsert,
            },
            size,
            train_per_class: per_class,
            test_per_class: per_class,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub train_domain: String,
    pub train: LabeledDataset,
    /// `(domain, dataset)` in config order.
    pub test: Vec<(String, LabeledDataset)>,
}

const TRAIN_SPLIT: u64 = 1;
const TEST_SPLIT: u64 = 2;

pub fn build_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    if cfg.train_per_class == 0 || cfg.test_per_class == 0 {
        return Err(Error::Config("per-class counts must be >= 1".into()));
    }
    let spec = |category, generator, split, count| GenSpec {
        category,
        generator,
        size: cfg.size,
        seed: derive_seed(cfg.seed, &[split]),
        count,
    };
    let (ntr, nte) = (cfg.train_per_class, cfg.test_per_class);
    match &cfg.protocol {
        Protocol::CrossCategory {
            train,
            test,
            generator,
        } => {
            if test.is_empty() {
                return Err(Error::Config("no test categories".into()));
            }
            Ok(Experiment {
                train_domain: train.name().into(),
                train: gen_balanced(&spec(*train, *generator, TRAIN_SPLIT, ntr))?,
                test: test
                    .iter()
                    .map(|c| Ok((c.name().to_string(), gen_balanced(&spec(*c, *generator, TEST_SPLIT, nte))?)))
                    .collect::<Result<_>>()?,
            })
        }
        Protocol::CrossColor {
            category,
            generator,
            ops,
        } => {
            let base = gen_balanced(&spec(*category, *generator, TEST_SPLIT, nte))?;
            let mut test = vec![("original".to_string(), base.clone())];
            for op in ops {
                test.push((op.name(), base.map_images(|img| apply_color(img, *op))));
            }
            Ok(Experiment {
                train_domain: "original".into(),
                train: gen_balanced(&spec(*category, *generator, TRAIN_SPLIT, ntr))?,
                test,
            })
        }
        Protocol::CrossModel {
            category,
            train,
            test,
        } => {
            if test.is_empty() {
                return Err(Error::Config("no test generators".into()));
            }
            Ok(Experiment {
                train_domain: train.name().into(),
                train: gen_balanced(&spec(*category, *train, TRAIN_SPLIT, ntr))?,
                test: test
                    .iter()
                    .map(|g| Ok((g.name().to_string(), gen_balanced(&spec(*category, *g, TEST_SPLIT, nte))?)))
                    .collect::<Result<_>>()?,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fft2d;

    #[test]
    fn zero_insert_replicates_baseband() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = GrayImage::from_fn(8, 8, |_, _| rng.gen());
        let small = fft2d(&x).unwrap();
        let big = fft2d(&zero_insert_upsample(&x)).unwrap();
        for v in 0..16 {
            for u in 0..16 {
                assert!((big.get(v, u) - small.get(v % 8, u % 8)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn nearest_is_zero_insert_then_box() {
        let x = GrayImage::from_fn(4, 4, |y, x| (y * 4 + x) as f64);
        let up = Generator::Nearest.upsample(&x);
        for y in 0..8 {
            for xx in 0..8 {
                assert_eq!(up.get(y, xx), x.get(y / 2, xx / 2));
            }
        }
    }

    #[test]
    fn bilinear_interpolates_midpoints() {
        let x = GrayImage::from_fn(4, 4, |_, c| c as f64);
        let up = Generator::Bilinear.upsample(&x);
        assert_eq!(up.get(0, 2), 1.0);
        assert_eq!(up.get(0, 3), 1.5);
        assert_eq!(up.get(1, 3), 1.5);
    }

    #[test]
    fn generators_preserve_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = GrayImage::from_fn(8, 8, |_, _| rng.gen());
        let mean = x.as_slice().iter().sum::<f64>() / 64.0;
        for g in Generator::ALL {
            let up = g.upsample(&x);
            let m = up.as_slice().iter().sum::<f64>() / 256.0;
            assert!((m - mean).abs() < 1e-12, "{g}");
        }
    }

    #[test]
    fn artifact_mask_counts() {
        let m = artifact_mask(16, 16);
        // baseband keeps |w| < 4 on both axes: 7 x 7 bins
        assert_eq!(m.iter().filter(|&&b| !b).count(), 49);
        assert!(!m[0]);
        assert!(m[8 * 16 + 8]);
    }

    #[test]
    fn scenes_are_deterministic_and_in_range() {
        let a = render_scene(Category::Blobs, 32, 11);
        let b = render_scene(Category::Blobs, 32, 11);
        assert_eq!(a, b);
        assert_ne!(a, render_scene(Category::Blobs, 32, 12));
        assert!(a.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn gen_labels_and_balance() {
        let spec = GenSpec {
            category: Category::Rings,
            generator: Generator::Bilinear,
            size: 16,
            seed: 1,
            count: 3,
        };
        assert!(gen_real(&spec).unwrap().records.iter().all(|r| r.label == Label::Real));
        assert!(gen_fake(&spec).unwrap().records.iter().all(|r| r.label == Label::Fake));
        assert_eq!(gen_balanced(&spec).unwrap().class_counts(), (3, 3));
        assert!(gen_real(&GenSpec { count: 0, ..spec }).is_err());
        assert!(gen_fake(&GenSpec { size: 15, ..spec }).is_err());
    }

    #[test]
    fn hsv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = [rng.gen(), rng.gen(), rng.gen()];
            let q = hsv_to_rgb(rgb_to_hsv(p));
            for c in 0..3 {
                assert!((p[c] - q[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn color_identities() {
        let img = render_scene(Category::Disks, 16, 2);
        for kind in ColorKind::ALL {
            let amount = if kind == ColorKind::Hue { 0.0 } else { 1.0 };
            let out = apply_color(&img, ColorOp { kind, amount });
            for (a, b) in out.as_slice().iter().zip(img.as_slice()) {
                assert!((a - b).abs() < 1e-12, "{}", kind.name());
            }
        }
        let half = ColorOp {
            kind: ColorKind::Hue,
            amount: 0.5,
        };
        let twice = apply_color(&apply_color(&img, half), half);
        for (a, b) in twice.as_slice().iter().zip(img.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
        let ends = RgbImage::new(1, 2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(apply_color(&ends, ColorOp::standard(ColorKind::Gamma)), ends);
    }

    #[test]
    fn cross_category_partition() {
        let cfg = ExperimentConfig {
            protocol: Protocol::CrossCategory {
                train: Category::Disks,
                test: vec![Category::Rings],
                generator: Generator::Nearest,
            },
            size: 16,
            train_per_class: 2,
            test_per_class: 3,
            seed: 9,
        };
        let exp = build_experiment(&cfg).unwrap();
        assert!(exp.train.records.iter().all(|r| r.category == Category::Disks));
        assert_eq!(exp.test.len(), 1);
        assert!(exp.test[0].1.records.iter().all(|r| r.category == Category::Rings));
        assert_eq!(exp.train.class_counts(), (2, 2));
        assert_eq!(exp.test[0].1.class_counts(), (3, 3));
        assert_eq!(build_experiment(&cfg).unwrap(), exp);
    }

    #[test]
    fn cross_color_and_model_domains() {
        let cfg = ExperimentConfig {
            protocol: Protocol::CrossColor {
                category: Category::Blobs,
                generator: Generator::ZeroInsert,
                ops: ColorKind::ALL.map(ColorOp::standard).to_vec(),
            },
            size: 16,
            train_per_class: 1,
            test_per_class: 1,
            seed: 0,
        };
        let exp = build_experiment(&cfg).unwrap();
        assert_eq!(exp.test.len(), 6);
        assert_eq!(exp.test[1].0, "hue-0.2");
        let cfg = ExperimentConfig {
            protocol: Protocol::CrossModel {
                category: Category::Blobs,
                train: Generator::Nearest,
                test: vec![],
            },
            ..cfg
        };
        assert!(build_experiment(&cfg).is_err());
    }
}
