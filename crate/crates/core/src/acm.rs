//! Artifact compression map.
//!
//! A two-channel trainable map `W_a` produces a per-bin mask
//! `W_c = softmax_T(W_a)[0]` in `(0, 1)`. The add-on module multiplies an
//! image's DFT by `W_c` and transforms back, giving the compressed image
//! `X^`. Training alternates two updates per mini-batch:
//!
//! 1. the classifier learns to label both `X` and `X^` correctly;
//! 2. `W_a` alone is updated so that compressed fakes are classified as real.
//!
//! `W_c` is stored in DFT-native bin order and is only shifted for display.
//! Hermitian symmetry is not imposed; `X^` is the real part of the inverse
//! transform and the discarded imaginary norm is tracked as a diagnostic.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, Error, Result};
use crate::evalkit::accuracy;
use crate::netlite::{
    cross_entropy, cross_entropy_logit_grad, AdamState, Classifier, InputSpec, Trace,
};
use crate::numerics::{dft2_in_place, fftshift, Direction, Planes, RealMap};
use crate::Label;

/// Trainable `W_a` (two channels) plus the softmax temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionMapParams {
    height: usize,
    width: usize,
    pub w_a1: Vec<f64>,
    pub w_a2: Vec<f64>,
    temperature: f64,
    init_scale: f64,
}

impl CompressionMapParams {
    /// `W_a1 = init_scale`, `W_a2 = -init_scale` everywhere.
    pub fn new(height: usize, width: usize, temperature: f64, init_scale: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        if !(init_scale.is_finite() && init_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "init scale must be positive, got {init_scale}"
            )));
        }
        let n = height * width;
        Ok(Self {
            height,
            width,
            w_a1: vec![init_scale; n],
            w_a2: vec![-init_scale; n],
            temperature,
            init_scale,
        })
    }

    pub fn from_channels(
        height: usize,
        width: usize,
        w_a1: Vec<f64>,
        w_a2: Vec<f64>,
        temperature: f64,
    ) -> Result<Self> {
        let n = height * width;
        if w_a1.len() != n || w_a2.len() != n {
            return Err(shape_err(
                format!("2 x {n}"),
                format!("{} + {}", w_a1.len(), w_a2.len()),
            ));
        }
        crate::error::check_finite("W_a", &w_a1)?;
        crate::error::check_finite("W_a", &w_a2)?;
        let mut p = Self::new(height, width, temperature, 1.0)?;
        p.w_a1 = w_a1;
        p.w_a2 = w_a2;
        p.init_scale = f64::NAN;
        Ok(p)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// `NaN` when the parameters were loaded rather than initialized.
    pub fn init_scale(&self) -> f64 {
        self.init_scale
    }
}

/// Per-bin compression mask in DFT-native order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

/// Two-way softmax with temperature, first channel.
pub fn compute_wc(params: &CompressionMapParams) -> CompressionMap {
    let t = params.temperature;
    let values = params
        .w_a1
        .iter()
        .zip(&params.w_a2)
        .map(|(&a1, &a2)| {
            let d = t * (a1 - a2);
            if d >= 0.0 {
                1.0 / (1.0 + (-d).exp())
            } else {
                let e = d.exp();
                e / (1.0 + e)
            }
        })
        .collect();
    CompressionMap {
        height: params.height,
        width: params.width,
        values,
    }
}

impl CompressionMap {
    /// Arbitrary mask with values in `[0, 1]`; trained maps always lie strictly inside.
    pub fn from_values(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(shape_err(
                format!("{height}x{width}"),
                format!("{} values", values.len()),
            ));
        }
        if let Some(i) = values
            .iter()
            .position(|v| !(v.is_finite() && (0.0..=1.0).contains(v)))
        {
            return Err(Error::InvalidParameter(format!(
                "mask value {} at {i} outside [0, 1]",
                values[i]
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn constant(height: usize, width: usize, v: f64) -> Result<Self> {
        Self::from_values(height, width, vec![v; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }

    /// Mean over the bins selected by `mask` (DFT-native order).
    pub fn masked_mean(&self, mask: &[bool], select: bool) -> f64 {
        let (sum, n) = self
            .values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m == select)
            .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
        sum / n.max(1) as f64
    }

    /// Centered copy for visualization.
    pub fn display(&self) -> RealMap {
        fftshift(&RealMap {
            height: self.height,
            width: self.width,
            data: self.values.clone(),
            centered: false,
        })
    }

    fn check(&self, x: &Planes) -> Result<()> {
        if x.height() != self.height || x.width() != self.width {
            return Err(shape_err(
                format!("{}x{} image", self.height, self.width),
                format!("{}x{}", x.height(), x.width()),
            ));
        }
        Ok(())
    }

    /// Add-on module forward: `Re F^-1{W_c . F{X}}`, one mask shared by all channels.
    pub fn apply(&self, x: &Planes) -> Result<Planes> {
        self.apply_with_residual(x).map(|(p, _)| p)
    }

    /// Like [`CompressionMap::apply`], also returning the discarded imaginary norm.
    pub fn apply_with_residual(&self, x: &Planes) -> Result<(Planes, f64)> {
        self.check(x)?;
        let spectra = plane_spectra(x);
        Ok(self.apply_spectra(&spectra, x.channels()))
    }

    fn apply_spectra(&self, spectra: &[Complex64], channels: usize) -> (Planes, f64) {
        let (h, w) = (self.height, self.width);
        let n = h * w;
        let mut out = Vec::with_capacity(channels * n);
        let mut residual = 0.0;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..channels {
            for ((b, z), wc) in buf.iter_mut().zip(&spectra[c * n..(c + 1) * n]).zip(&self.values) {
                *b = z * wc;
            }
            dft2_in_place(&mut buf, h, w, Direction::Inverse);
            residual += buf.iter().map(|z| z.im * z.im).sum::<f64>();
            out.extend(buf.iter().map(|z| z.re));
        }
        let planes = Planes::new(channels, h, w, out).expect("finite by construction");
        (planes, residual.sqrt())
    }
}

fn plane_spectra(x: &Planes) -> Vec<Complex64> {
    let (h, w) = (x.height(), x.width());
    let mut out: Vec<Complex64> = x
        .as_slice()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    for chunk in out.chunks_exact_mut(h * w) {
        dft2_in_place(chunk, h, w, Direction::Forward);
    }
    out
}

pub fn addon_forward(x: &Planes, params: &CompressionMapParams) -> Result<Planes> {
    compute_wc(params).apply(x)
}

/// Training item with its per-channel spectrum precomputed.
#[derive(Debug, Clone)]
pub struct AcmItem {
    pub image: Planes,
    pub label: Label,
    spectra: Vec<Complex64>,
}

impl AcmItem {
    pub fn new(image: Planes, label: Label) -> Self {
        let spectra = plane_spectra(&image);
        Self {
            image,
            label,
            spectra,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossC {
    pub loss: f64,
    /// Gradient with respect to the classifier parameters.
    pub grad: Vec<f64>,
    pub imag_residual: f64,
}

/// Classification loss on originals plus compressed copies; `W_a` receives no gradient.
pub fn loss_c(batch: &[AcmItem], classifier: &Classifier, wc: &CompressionMap) -> Result<LossC> {
    if batch.is_empty() {
        return Err(Error::Empty("loss_c batch"));
    }
    let mut grad = vec![0.0; classifier.num_params()];
    let mut loss = 0.0;
    let mut residual = 0.0;
    for item in batch {
        wc.check(&item.image)?;
        let (compressed, r) = wc.apply_spectra(&item.spectra, item.image.channels());
        residual += r;
        for x in [&item.image, &compressed] {
            let mut trace = Trace::default();
            let p = classifier.forward_traced(x, &mut trace)?;
            loss += cross_entropy(p, item.label);
            let g = classifier.backward_logit(&trace, cross_entropy_logit_grad(p, item.label))?;
            for (a, b) in grad.iter_mut().zip(&g.params) {
                *a += b;
            }
        }
    }
    Ok(LossC {
        loss,
        grad,
        imag_residual: residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossAdv {
    pub loss: f64,
    pub grad_a1: Vec<f64>,
    pub grad_a2: Vec<f64>,
    /// Number of fake items that contributed.
    pub fakes: usize,
}

/// Inverted-label loss on compressed fakes; the gradient flows into `W_a` only.
///
/// Real items in `batch` are skipped.
pub fn loss_adv(
    batch: &[AcmItem],
    classifier: &Classifier,
    params: &CompressionMapParams,
) -> Result<LossAdv> {
    let fakes: Vec<&AcmItem> = batch.iter().filter(|i| i.label == Label::Fake).collect();
    if fakes.is_empty() {
        return Err(Error::Empty("loss_adv batch has no fake items"));
    }
    let wc = compute_wc(params);
    let (h, w) = (params.height, params.width);
    let n = h * w;
    let inv_n = 1.0 / n as f64;
    let mut grad_wc = vec![0.0; n];
    let mut loss = 0.0;
    let mut gbuf = vec![Complex64::new(0.0, 0.0); n];
    for item in &fakes {
        wc.check(&item.image)?;
        let channels = item.image.channels();
        let (compressed, _) = wc.apply_spectra(&item.spectra, channels);
        let mut trace = Trace::default();
        let p = classifier.forward_traced(&compressed, &mut trace)?;
        loss += cross_entropy(p, Label::Real);
        let g = classifier.backward_logit(&trace, cross_entropy_logit_grad(p, Label::Real))?;
        // dL/dW_c(k) = (1/N) Re(Z(k) conj(F{dL/dX^}(k))), summed over channels
        for c in 0..channels {
            for (b, v) in gbuf.iter_mut().zip(g.input.plane(c)) {
                *b = Complex64::new(*v, 0.0);
            }
            dft2_in_place(&mut gbuf, h, w, Direction::Forward);
            for ((acc, z), gk) in grad_wc
                .iter_mut()
                .zip(&item.spectra[c * n..(c + 1) * n])
                .zip(&gbuf)
            {
                *acc += inv_n * (z * gk.conj()).re;
            }
        }
    }
    let t = params.temperature;
    let grad_a1: Vec<f64> = grad_wc
        .iter()
        .zip(wc.values())
        .map(|(g, v)| g * t * v * (1.0 - v))
        .collect();
    let grad_a2 = grad_a1.iter().map(|g| -g).collect();
    Ok(LossAdv {
        loss,
        grad_a1,
        grad_a2,
        fakes: fakes.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcmConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Adam learning rate of the classifier update.
    pub lr: f64,
    /// Adam learning rate of the `W_a` update.
    pub map_lr: f64,
    pub temperature: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for AcmConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 16,
            lr: 1e-4,
            map_lr: 1e-4,
            temperature: 1.0,
            init_scale: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcmEpoch {
    pub loss_c: f64,
    pub loss_adv: f64,
    pub mean_wc: f64,
    /// Imaginary residual of the compressed images relative to their real norm.
    pub imag_residual: f64,
}

#[derive(Debug, Clone)]
pub struct AcmRun {
    pub classifier: Classifier,
    pub initial_classifier: Classifier,
    pub params: CompressionMapParams,
    pub history: Vec<AcmEpoch>,
}

/// Two-step adversarial training of a fresh classifier and compression map.
pub fn train_acm(data: &[AcmItem], cfg: &AcmConfig) -> Result<AcmRun> {
    let first = data.first().ok_or(Error::Empty("ACM training set"))?;
    if !data.iter().any(|i| i.label == Label::Real) || !data.iter().any(|i| i.label == Label::Fake)
    {
        return Err(Error::Experiment(
            "ACM training needs both real and fake items".into(),
        ));
    }
    let spec = InputSpec::of(&first.image);
    let classifier = Classifier::new(spec, cfg.seed);
    let params = CompressionMapParams::new(spec.height, spec.width, cfg.temperature, cfg.init_scale)?;
    train_acm_from(classifier, params, data, cfg)
}

/// [`train_acm`] starting from the given classifier and map.
pub fn train_acm_from(
    classifier: Classifier,
    params: CompressionMapParams,
    data: &[AcmItem],
    cfg: &AcmConfig,
) -> Result<AcmRun> {
    if cfg.batch_size == 0 {
        return Err(Error::InvalidParameter("batch size must be >= 1".into()));
    }
    let initial_classifier = classifier.clone();
    let mut classifier = classifier;
    let mut params = params;
    let n = params.height * params.width;
    let mut adam_g = AdamState::new(classifier.num_params(), cfg.lr);
    let mut adam_a = AdamState::new(2 * n, cfg.map_lr);
    let mut wa = [params.w_a1.clone(), params.w_a2.clone()].concat();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xac3);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let image_norm: f64 = data
        .iter()
        .map(|i| i.image.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut lc_total, mut la_total, mut residual) = (0.0, 0.0, 0.0);
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<AcmItem> = chunk.iter().map(|&i| data[i].clone()).collect();
            let diverged = |detail: String| Error::Diverged {
                epoch,
                step,
                detail,
            };

            let wc = compute_wc(&params);
            let lc = loss_c(&batch, &classifier, &wc)?;
            if !lc.loss.is_finite() {
                return Err(diverged(format!("classification loss {}", lc.loss)));
            }
            adam_g
                .step(classifier.params_mut(), &lc.grad)
                .map_err(|e| diverged(e.to_string()))?;
            lc_total += lc.loss;
            residual += lc.imag_residual;

            if batch.iter().any(|i| i.label == Label::Fake) {
                let la = loss_adv(&batch, &classifier, &params)?;
                if !la.loss.is_finite() {
                    return Err(diverged(format!("adversarial loss {}", la.loss)));
                }
                let grad = [la.grad_a1, la.grad_a2].concat();
                adam_a
                    .step(&mut wa, &grad)
                    .map_err(|e| diverged(e.to_string()))?;
                params.w_a1.copy_from_slice(&wa[..n]);
                params.w_a2.copy_from_slice(&wa[n..]);
                la_total += la.loss;
            }
        }
        history.push(AcmEpoch {
            loss_c: lc_total,
            loss_adv: la_total,
            mean_wc: compute_wc(&params).mean(),
            imag_residual: residual / image_norm.max(f64::MIN_POSITIVE),
        });
    }
    Ok(AcmRun {
        classifier,
        initial_classifier,
        params,
        history,
    })
}

/// Signed difference between an image and its compressed copy.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactImage {
    pub planes: Planes,
}

impl ArtifactImage {
    pub fn energy(&self) -> f64 {
        self.planes.as_slice().iter().map(|v| v * v).sum()
    }
}

/// `X - X^` under the given mask.
pub fn artifact_image_with(x: &Planes, wc: &CompressionMap) -> Result<ArtifactImage> {
    let compressed = wc.apply(x)?;
    let data = x
        .as_slice()
        .iter()
        .zip(compressed.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    Ok(ArtifactImage {
        planes: Planes::new(x.channels(), x.height(), x.width(), data)?,
    })
}

pub fn artifact_image(x: &Planes, params: &CompressionMapParams) -> Result<ArtifactImage> {
    artifact_image_with(x, &compute_wc(params))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageMaps {
    /// Centered `W_c`.
    pub wc_display: RealMap,
    /// Mean over images (and channels) of `|X - X^|`, pixel layout.
    pub mean_abs_artifact: RealMap,
}

pub fn average_maps_with(images: &[Planes], wc: &CompressionMap) -> Result<AverageMaps> {
    let first = images.first().ok_or(Error::Empty("average_maps dataset"))?;
    let (h, w) = (first.height(), first.width());
    let mut acc = vec![0.0; h * w];
    let mut count = 0usize;
    for img in images {
        let art = artifact_image_with(img, wc)?;
        for c in 0..img.channels() {
            for (a, v) in acc.iter_mut().zip(art.planes.plane(c)) {
                *a += v.abs();
            }
            count += 1;
        }
    }
    for a in &mut acc {
        *a /= count as f64;
    }
    Ok(AverageMaps {
        wc_display: wc.display(),
        mean_abs_artifact: RealMap {
            height: h,
            width: w,
            data: acc,
            centered: false,
        },
    })
}

pub fn average_maps(images: &[Planes], params: &CompressionMapParams) -> Result<AverageMaps> {
    average_maps_with(images, &compute_wc(params))
}

/// Accuracy of one domain when predicting from originals vs compressed images.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRow {
    pub domain: String,
    pub acc_original: f64,
    pub acc_compressed: f64,
}

pub fn compare_original_vs_compressed(
    classifier: &Classifier,
    wc: &CompressionMap,
    domains: &[(String, Vec<(Planes, Label)>)],
) -> Result<Vec<SchemeRow>> {
    let mut rows = Vec::with_capacity(domains.len());
    for (domain, items) in domains {
        let mut orig = Vec::with_capacity(items.len());
        let mut comp = Vec::with_capacity(items.len());
        let mut labels = Vec::with_capacity(items.len());
        for (x, y) in items {
            orig.push(classifier.forward(x)?);
            comp.push(classifier.forward(&wc.apply(x)?)?);
            labels.push(*y);
        }
        rows.push(SchemeRow {
            domain: domain.clone(),
            acc_original: accuracy(&orig, &labels)?,
            acc_compressed: accuracy(&comp, &labels)?,
        });
    }
    Ok(rows)
}

/// Fraction of `fakes` the classifier labels real after compression by `wc`.
pub fn fake_as_real_rate(
    classifier: &Classifier,
    wc: &CompressionMap,
    fakes: &[Planes],
) -> Result<f64> {
    if fakes.is_empty() {
        return Err(Error::Empty("fake set"));
    }
    let mut fooled = 0usize;
    for x in fakes {
        if classifier.forward(&wc.apply(x)?)? <= 0.5 {
            fooled += 1;
        }
    }
    Ok(fooled as f64 / fakes.len() as f64)
}
