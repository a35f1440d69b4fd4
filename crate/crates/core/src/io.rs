//! File formats: binary PNM images, `F32T` tensors, checkpoints, run
//! configs and dataset manifests. Every writer goes through a temporary file
//! and a rename so readers never observe partial output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::acm::{AcmConfig, CompressionMapParams};
use crate::bihpf::{BihpfConfig, ColorMode, FreqHpfSpec, LogFilterSpec, PassBand};
use crate::error::{shape_err, Error, Result};
use crate::netlite::{Classifier, InputSpec, TrainConfig};
use crate::numerics::{GrayImage, RgbImage};
use crate::synthlab::{
    Category, ColorKind, ColorOp, Experiment, ExperimentConfig, Generator, LabeledDataset, Protocol,
    Record,
};
use crate::Label;

/// Writes `bytes` to `path` via a sibling temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        e.into()
    })
}

// ---------------------------------------------------------------- PNM

#[derive(Debug, Clone, PartialEq)]
pub enum PnmImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl PnmImage {
    pub fn into_rgb(self) -> RgbImage {
        match self {
            PnmImage::Rgb(img) => img,
            PnmImage::Gray(g) => RgbImage::from_channels(&g, &g, &g).expect("same dims"),
        }
    }
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.as_slice().iter().map(|&v| quantize(v)));
    out
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.as_slice().iter().map(|&v| quantize(v)));
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("{what} out of range")))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<PnmImage> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::MalformedHeader("missing P5/P6 magic".into()));
    }
    let channels = match bytes[1] {
        b'5' => 1,
        b'6' => 3,
        other => {
            return Err(Error::MalformedHeader(format!(
                "unsupported magic P{}",
                other as char
            )))
        }
    };
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number("width")? as usize;
    let height = r.number("height")? as usize;
    let maxval = r.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    match bytes.get(r.pos) {
        Some(b) if b.is_ascii_whitespace() => r.pos += 1,
        _ => return Err(Error::MalformedHeader("no whitespace after maxval".into())),
    }
    let expected = width * height * channels;
    let payload = &bytes[r.pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    let data: Vec<f64> = payload[..expected].iter().map(|&b| b as f64 / 255.0).collect();
    Ok(if channels == 1 {
        PnmImage::Gray(GrayImage::new(height, width, data)?)
    } else {
        PnmImage::Rgb(RgbImage::new(height, width, data)?)
    })
}

pub fn read_pnm(path: &Path) -> Result<PnmImage> {
    decode_pnm(&fs::read(path)?)
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    write_atomic(path, &encode_pgm(img))
}

pub fn write_ppm(path: &Path, img: &RgbImage) -> Result<()> {
    write_atomic(path, &encode_ppm(img))
}

/// Linear rescale of arbitrary values into an 8-bit grayscale preview.
pub fn preview_image(height: usize, width: usize, values: &[f64]) -> Result<GrayImage> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    GrayImage::new(height, width, values.iter().map(|v| (v - lo) / span).collect())
}

// ---------------------------------------------------------------- F32T

pub const TENSOR_MAGIC: &[u8; 4] = b"F32T";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidParameter("rank-0 tensors are not allowed".into()));
        }
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::PayloadMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn from_f64(dims: Vec<usize>, data: &[f64]) -> Result<Self> {
        Self::new(dims, data.iter().map(|&v| v as f32).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

pub fn encode_tensor(t: &Tensor, out: &mut Vec<u8>) {
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
    for &d in &t.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_u32(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    let end = *pos + 4;
    let chunk = bytes.get(*pos..end).ok_or(Error::TruncatedPayload {
        expected: end,
        found: bytes.len(),
    })?;
    *pos = end;
    Ok(u32::from_le_bytes(chunk.try_into().expect("4 bytes")))
}

/// Decodes one tensor from the front of `bytes`; returns it and the bytes consumed.
///
/// With `exact`, trailing bytes are a payload mismatch.
fn decode_tensor_at(bytes: &[u8], exact: bool) -> Result<(Tensor, usize)> {
    if bytes.len() < 4 || &bytes[..4] != TENSOR_MAGIC {
        return Err(Error::BadMagic);
    }
    let mut pos = 4;
    let rank = read_u32(bytes, &mut pos)? as usize;
    if rank == 0 {
        return Err(Error::InvalidParameter("rank-0 tensors are not allowed".into()));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(read_u32(bytes, &mut pos)? as usize);
    }
    let expected = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| Error::InvalidParameter("tensor dims overflow".into()))?;
    let available = (bytes.len() - pos) / 4;
    let short = available < expected;
    let long = exact && (bytes.len() - pos) != expected * 4;
    if short || long {
        return Err(Error::PayloadMismatch {
            expected,
            found: available,
        });
    }
    let data = bytes[pos..pos + expected * 4]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((Tensor { dims, data }, pos + expected * 4))
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    decode_tensor_at(bytes, true).map(|(t, _)| t)
}

pub fn save_tensor(path: &Path, t: &Tensor) -> Result<()> {
    let mut out = Vec::new();
    encode_tensor(t, &mut out);
    write_atomic(path, &out)
}

pub fn load_tensor(path: &Path) -> Result<Tensor> {
    decode_tensor(&fs::read(path)?)
}

fn decode_tensor_stream(mut bytes: &[u8]) -> Result<Vec<Tensor>> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let (t, used) = decode_tensor_at(bytes, false)?;
        out.push(t);
        bytes = &bytes[used..];
    }
    Ok(out)
}

// ---------------------------------------------------------------- checkpoints

/// Descriptor line, newline, then each parameter tensor in layer order.
pub fn encode_classifier(model: &Classifier) -> Vec<u8> {
    let mut out = format!("{}\n", model.descriptor()).into_bytes();
    for t in model.tensors() {
        let t = Tensor::from_f64(t.dims, &t.data).expect("consistent dims");
        encode_tensor(&t, &mut out);
    }
    out
}

pub fn decode_classifier(bytes: &[u8]) -> Result<Classifier> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::InvalidParameter("checkpoint has no descriptor line".into()))?;
    let line = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::InvalidParameter("descriptor is not UTF-8".into()))?;
    let input = parse_descriptor(line)?;
    let tensors: Vec<(Vec<usize>, Vec<f64>)> = decode_tensor_stream(&bytes[nl + 1..])?
        .into_iter()
        .map(|t| {
            let data = t.to_f64();
            (t.dims, data)
        })
        .collect();
    let model = Classifier::from_tensors(input, &tensors)?;
    if model.descriptor() != line {
        return Err(Error::InvalidParameter(format!(
            "unknown architecture descriptor '{line}'"
        )));
    }
    Ok(model)
}

fn parse_descriptor(line: &str) -> Result<InputSpec> {
    let bad = || Error::InvalidParameter(format!("bad descriptor '{line}'"));
    let spec = line
        .strip_prefix("netlite in=")
        .and_then(|r| r.split_whitespace().next())
        .ok_or_else(bad)?;
    let dims: Vec<usize> = spec
        .split('x')
        .map(|d| d.parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match dims[..] {
        [c, h, w] => Ok(InputSpec::new(c, h, w)),
        _ => Err(bad()),
    }
}

pub fn save_classifier(path: &Path, model: &Classifier) -> Result<()> {
    write_atomic(path, &encode_classifier(model))
}

pub fn load_classifier(path: &Path) -> Result<Classifier> {
    decode_classifier(&fs::read(path)?)
}

/// `W_a` as a `[2, h, w]` tensor followed by the `[1]` temperature.
pub fn encode_map_params(p: &CompressionMapParams) -> Vec<u8> {
    let mut out = Vec::new();
    let data = [p.w_a1.as_slice(), p.w_a2.as_slice()].concat();
    encode_tensor(
        &Tensor::from_f64(vec![2, p.height(), p.width()], &data).expect("consistent dims"),
        &mut out,
    );
    encode_tensor(
        &Tensor::from_f64(vec![1], &[p.temperature()]).expect("one value"),
        &mut out,
    );
    out
}

pub fn decode_map_params(bytes: &[u8]) -> Result<CompressionMapParams> {
    let tensors = decode_tensor_stream(bytes)?;
    match &tensors[..] {
        [wa, t] if wa.dims.len() == 3 && wa.dims[0] == 2 && t.dims == [1] => {
            let n = wa.dims[1] * wa.dims[2];
            let all = wa.to_f64();
            CompressionMapParams::from_channels(
                wa.dims[1],
                wa.dims[2],
                all[..n].to_vec(),
                all[n..].to_vec(),
                t.data[0] as f64,
            )
        }
        _ => Err(shape_err(
            "[2,h,w] map and [1] temperature",
            format!("{:?}", tensors.iter().map(|t| &t.dims).collect::<Vec<_>>()),
        )),
    }
}

pub fn save_map_params(path: &Path, p: &CompressionMapParams) -> Result<()> {
    write_atomic(path, &encode_map_params(p))
}

pub fn load_map_params(path: &Path) -> Result<CompressionMapParams> {
    decode_map_params(&fs::read(path)?)
}

// ---------------------------------------------------------------- run config

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    CrossCategory,
    CrossColor,
    CrossModel,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::CrossCategory => "cross-category",
            ProtocolKind::CrossColor => "cross-color",
            ProtocolKind::CrossModel => "cross-model",
        }
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ProtocolKind::CrossCategory,
            ProtocolKind::CrossColor,
            ProtocolKind::CrossModel,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown protocol '{s}'")))
    }
}

/// Every hyperparameter of a run, stored as `key=value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sigma: f64,
    pub cutoff: f64,
    pub low_pass: bool,
    pub pixel_hpf: bool,
    pub freq_hpf: bool,
    pub color: ColorMode,
    pub temperature: f64,
    pub init_scale: f64,
    pub lr: f64,
    /// Classifier learning rate inside the adversarial ACM loop.
    pub acm_lr: f64,
    pub map_lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub size: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub protocol: ProtocolKind,
    /// Training domain: a category, or a generator for cross-model.
    pub train: String,
    /// Comma-separated test domains; color ops for cross-color.
    pub test: Vec<String>,
    pub category: Category,
    pub generator: Generator,
    pub data: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sigma: 0.01,
            cutoff: 40.0,
            low_pass: false,
            pixel_hpf: true,
            freq_hpf: true,
            color: ColorMode::Gray,
            temperature: 1.0,
            init_scale: 5.0,
            lr: 1e-4,
            acm_lr: 1e-4,
            map_lr: 1e-4,
            epochs: 20,
            batch: 16,
            seed: 0,
            size: 256,
            train_per_class: 200,
            test_per_class: 200,
            protocol: ProtocolKind::CrossCategory,
            train: Category::Disks.name().into(),
            test: Category::ALL.iter().map(|c| c.name().to_string()).collect(),
            category: Category::Disks,
            generator: Generator::ZeroInsert,
            data: None,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "sigma",
    "cutoff",
    "low_pass",
    "pixel_hpf",
    "freq_hpf",
    "color",
    "temperature",
    "init_scale",
    "lr",
    "acm_lr",
    "map_lr",
    "epochs",
    "batch",
    "seed",
    "size",
    "train_per_class",
    "test_per_class",
    "protocol",
    "train",
    "test",
    "category",
    "generator",
    "data",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

impl RunConfig {
    /// Desk-scale defaults: 64×64 images with the filter scales and learning
    /// rates adjusted to that grid.
    pub fn desk() -> Self {
        Self {
            sigma: 0.04,
            cutoff: 10.0,
            lr: 1e-3,
            acm_lr: 3e-3,
            map_lr: 0.02,
            size: 64,
            ..Self::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_over(Self::default(), text)
    }

    /// Applies `key=value` lines on top of `base`. `#` starts a comment.
    pub fn parse_over(base: Self, text: &str) -> Result<Self> {
        let mut cfg = base;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sigma" => self.sigma = parse_value(key, value)?,
            "cutoff" => self.cutoff = parse_value(key, value)?,
            "low_pass" => self.low_pass = parse_value(key, value)?,
            "pixel_hpf" => self.pixel_hpf = parse_value(key, value)?,
            "freq_hpf" => self.freq_hpf = parse_value(key, value)?,
            "color" => {
                self.color = match value {
                    "gray" => ColorMode::Gray,
                    "rgb" => ColorMode::Rgb,
                    _ => return Err(Error::Config(format!("invalid color '{value}'"))),
                }
            }
            "temperature" => self.temperature = parse_value(key, value)?,
            "init_scale" => self.init_scale = parse_value(key, value)?,
            "lr" => self.lr = parse_value(key, value)?,
            "acm_lr" => self.acm_lr = parse_value(key, value)?,
            "map_lr" => self.map_lr = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch" => self.batch = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "size" => self.size = parse_value(key, value)?,
            "train_per_class" => self.train_per_class = parse_value(key, value)?,
            "test_per_class" => self.test_per_class = parse_value(key, value)?,
            "protocol" => self.protocol = value.parse()?,
            "train" => self.train = value.to_string(),
            "test" => {
                self.test = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "category" => self.category = value.parse().map_err(config_err)?,
            "generator" => self.generator = value.parse().map_err(config_err)?,
            "data" => self.data = (!value.is_empty()).then(|| PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let color = match self.color {
            ColorMode::Gray => "gray",
            ColorMode::Rgb => "rgb",
        };
        let data = self
            .data
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let pairs: [(&str, String); 23] = [
            ("sigma", self.sigma.to_string()),
            ("cutoff", self.cutoff.to_string()),
            ("low_pass", self.low_pass.to_string()),
            ("pixel_hpf", self.pixel_hpf.to_string()),
            ("freq_hpf", self.freq_hpf.to_string()),
            ("color", color.into()),
            ("temperature", self.temperature.to_string()),
            ("init_scale", self.init_scale.to_string()),
            ("lr", self.lr.to_string()),
            ("acm_lr", self.acm_lr.to_string()),
            ("map_lr", self.map_lr.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch", self.batch.to_string()),
            ("seed", self.seed.to_string()),
            ("size", self.size.to_string()),
            ("train_per_class", self.train_per_class.to_string()),
            ("test_per_class", self.test_per_class.to_string()),
            ("protocol", self.protocol.name().into()),
            ("train", self.train.clone()),
            ("test", self.test.join(",")),
            ("category", self.category.name().into()),
            ("generator", self.generator.name().into()),
            ("data", data),
        ];
        for (k, v) in pairs {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn bihpf(&self) -> Result<BihpfConfig> {
        let mode = if self.low_pass {
            PassBand::Low
        } else {
            PassBand::High
        };
        Ok(BihpfConfig {
            log: LogFilterSpec::new(self.sigma)?,
            hpf: FreqHpfSpec::new(self.cutoff, mode)?,
            enable_pixel_hpf: self.pixel_hpf,
            enable_freq_hpf: self.freq_hpf,
            color: self.color,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch,
            lr: self.lr,
            seed: self.seed,
        }
    }

    pub fn acm_config(&self) -> AcmConfig {
        AcmConfig {
            epochs: self.epochs,
            batch_size: self.batch,
            lr: self.acm_lr,
            map_lr: self.map_lr,
            temperature: self.temperature,
            init_scale: self.init_scale,
            seed: self.seed,
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let protocol = match self.protocol {
            ProtocolKind::CrossCategory => Protocol::CrossCategory {
                train: self.train.parse().map_err(config_err)?,
                test: self
                    .test
                    .iter()
                    .map(|s| s.parse().map_err(config_err))
                    .collect::<Result<_>>()?,
                generator: self.generator,
            },
            ProtocolKind::CrossColor => Protocol::CrossColor {
                category: self.category,
                generator: self.generator,
                ops: self
                    .test
                    .iter()
                    .map(|s| parse_color_op(s))
                    .collect::<Result<_>>()?,
            },
            ProtocolKind::CrossModel => Protocol::CrossModel {
                category: self.category,
                train: self.train.parse().map_err(config_err)?,
                test: self
                    .test
                    .iter()
                    .map(|s| s.parse().map_err(config_err))
                    .collect::<Result<_>>()?,
            },
        };
        Ok(ExperimentConfig {
            protocol,
            size: self.size,
            train_per_class: self.train_per_class,
            test_per_class: self.test_per_class,
            seed: self.seed,
        })
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    }
}

/// `kind` or `kind:amount`; the bare kind uses the standard amount.
pub fn parse_color_op(s: &str) -> Result<ColorOp> {
    let (kind, amount) = match s.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (s, None),
    };
    let kind: ColorKind = kind.parse().map_err(config_err)?;
    Ok(match amount {
        Some(a) => ColorOp {
            kind,
            amount: parse_value("test", a)?,
        },
        None => ColorOp::standard(kind),
    })
}

// ---------------------------------------------------------------- manifests

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Writes `images/NNNNN.ppm` files plus a manifest of
/// `<relpath> <label> <category> <generator>` lines.
pub fn write_dataset(dir: &Path, ds: &LabeledDataset) -> Result<()> {
    let mut manifest = String::new();
    for (i, r) in ds.records.iter().enumerate() {
        let rel = format!("images/{i:05}.ppm");
        write_ppm(&dir.join(&rel), &r.image)?;
        let _ = writeln!(
            manifest,
            "{rel} {} {} {}",
            r.label as u8,
            r.category.name(),
            r.generator_tag()
        );
    }
    write_atomic(&dir.join(MANIFEST_NAME), manifest.as_bytes())
}

pub fn read_dataset(dir: &Path) -> Result<LabeledDataset> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path)?;
    let err = |n: usize, detail: String| Error::Manifest {
        path: path.clone(),
        detail: format!("line {}: {detail}", n + 1),
    };
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [rel, label, category, generator] = fields[..] else {
            return Err(err(n, format!("expected 4 fields, got {}", fields.len())));
        };
        let label: u8 = label
            .parse()
            .map_err(|_| err(n, format!("bad label '{label}'")))?;
        let label = Label::from_u8(label).map_err(|e| err(n, e.to_string()))?;
        let category: Category = category.parse().map_err(|e: Error| err(n, e.to_string()))?;
        let generator = match generator {
            "real" => None,
            g => Some(g.parse::<Generator>().map_err(|e| err(n, e.to_string()))?),
        };
        if (label == Label::Real) != generator.is_none() {
            return Err(err(n, "label and generator tag disagree".into()));
        }
        let image = read_pnm(&dir.join(rel))?.into_rgb();
        records.push(Record {
            image,
            label,
            category,
            generator,
        });
    }
    Ok(LabeledDataset { records })
}

pub const EXPERIMENT_INDEX: &str = "experiment.txt";

/// Layout: `train/`, `test/<domain>/` dataset directories plus an index
/// listing `train <domain>` and one `test <domain>` line per test domain.
pub fn write_experiment(dir: &Path, exp: &Experiment) -> Result<()> {
    write_dataset(&dir.join("train"), &exp.train)?;
    let mut index = format!("train {}\n", exp.train_domain);
    for (name, ds) in &exp.test {
        write_dataset(&dir.join("test").join(name), ds)?;
        let _ = writeln!(index, "test {name}");
    }
    write_atomic(&dir.join(EXPERIMENT_INDEX), index.as_bytes())
}

pub fn read_experiment(dir: &Path) -> Result<Experiment> {
    let path = dir.join(EXPERIMENT_INDEX);
    let text = fs::read_to_string(&path)?;
    let mut train_domain = None;
    let mut test = Vec::new();
    for (n, line) in text.lines().enumerate() {
        match line.split_once(' ') {
            Some(("train", d)) => train_domain = Some(d.to_string()),
            Some(("test", d)) => test.push((d.to_string(), read_dataset(&dir.join("test").join(d))?)),
            _ if line.trim().is_empty() => {}
            _ => {
                return Err(Error::Manifest {
                    path,
                    detail: format!("line {}: expected 'train <domain>' or 'test <domain>'", n + 1),
                })
            }
        }
    }
    let train_domain = train_domain.ok_or_else(|| Error::Manifest {
        path: path.clone(),
        detail: "missing train line".into(),
    })?;
    Ok(Experiment {
        train_domain,
        train: read_dataset(&dir.join("train"))?,
        test,
    })
}
