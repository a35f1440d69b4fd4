//! Small from-scratch real/fake classifier with exact analytic gradients.
//!
//! Architecture: `conv 3x3/2 (8) -> ReLU -> conv 3x3/2 (16) -> ReLU -> global
//! average pool -> linear (1) -> sigmoid`, zero padding 1 on both convolutions.
//! All parameters live in one flat vector so the optimizer can treat them
//! uniformly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, Error, Result};
use crate::numerics::Planes;
use crate::Label;

pub const ARCHITECTURE: &str = "conv3x3s2p1:8 relu conv3x3s2p1:16 relu gap linear:1 sigmoid";

const C1: usize = 8;
const C2: usize = 16;
const K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputSpec {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl InputSpec {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub fn of(x: &Planes) -> Self {
        Self::new(x.channels(), x.height(), x.width())
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    conv1_w: usize,
    conv1_b: usize,
    conv2_w: usize,
    conv2_b: usize,
    fc_w: usize,
    fc_b: usize,
    total: usize,
}

impl Layout {
    fn new(channels: usize) -> Self {
        let conv1_w = 0;
        let conv1_b = conv1_w + C1 * channels * K * K;
        let conv2_w = conv1_b + C1;
        let conv2_b = conv2_w + C2 * C1 * K * K;
        let fc_w = conv2_b + C2;
        let fc_b = fc_w + C2;
        Self {
            conv1_w,
            conv1_b,
            conv2_w,
            conv2_b,
            fc_w,
            fc_b,
            total: fc_b + 1,
        }
    }
}

/// One named parameter tensor, in checkpoint order.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: &'static str,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    input: InputSpec,
    layout: Layout,
    params: Vec<f64>,
}

/// Intermediates recorded by [`Classifier::forward_traced`].
#[derive(Debug, Clone, Default)]
pub struct Trace {
    inner: Option<TraceData>,
}

#[derive(Debug, Clone)]
struct TraceData {
    input: Planes,
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    pooled: Vec<f64>,
    prob: f64,
}

impl Trace {
    pub fn prob(&self) -> Option<f64> {
        self.inner.as_ref().map(|t| t.prob)
    }

    /// On/off pattern of both ReLU layers; the network is smooth wherever it is fixed.
    pub fn relu_pattern(&self) -> Option<Vec<bool>> {
        self.inner
            .as_ref()
            .map(|t| t.z1.iter().chain(&t.z2).map(|v| *v > 0.0).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Planes,
}

fn conv_out(n: usize) -> usize {
    // (n + 2 - 3) / 2 + 1
    n.div_ceil(2)
}

/// Stride-2, pad-1, 3x3 convolution. `input` is `cin x h x w`; returns `cout x ho x wo`.
fn conv_forward(
    input: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    bias: &[f64],
    cout: usize,
) -> Vec<f64> {
    let (ho, wo) = (conv_out(h), conv_out(w));
    let mut out = vec![0.0; cout * ho * wo];
    for oc in 0..cout {
        let plane = &mut out[oc * ho * wo..(oc + 1) * ho * wo];
        plane.fill(bias[oc]);
        for ic in 0..cin {
            let src = &input[ic * h * w..(ic + 1) * h * w];
            for ky in 0..K {
                for kx in 0..K {
                    let wv = weight[((oc * cin + ic) * K + ky) * K + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    for oy in 0..ho {
                        let iy = (2 * oy + ky) as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = &src[iy as usize * w..(iy as usize + 1) * w];
                        let orow = &mut plane[oy * wo..(oy + 1) * wo];
                        for (ox, o) in orow.iter_mut().enumerate() {
                            let ix = (2 * ox + kx) as isize - 1;
                            if ix >= 0 && ix < w as isize {
                                *o += wv * row[ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Backward of [`conv_forward`]. Accumulates into `dweight`/`dbias`; returns the input gradient.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    cout: usize,
    dout: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
) -> Vec<f64> {
    let (ho, wo) = (conv_out(h), conv_out(w));
    let mut din = vec![0.0; cin * h * w];
    for oc in 0..cout {
        let g = &dout[oc * ho * wo..(oc + 1) * ho * wo];
        dbias[oc] += g.iter().sum::<f64>();
        for ic in 0..cin {
            let src = &input[ic * h * w..(ic + 1) * h * w];
            let dsrc = &mut din[ic * h * w..(ic + 1) * h * w];
            for ky in 0..K {
                for kx in 0..K {
                    let widx = ((oc * cin + ic) * K + ky) * K + kx;
                    let wv = weight[widx];
                    let mut acc = 0.0;
                    for oy in 0..ho {
                        let iy = (2 * oy + ky) as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let base = iy as usize * w;
                        for ox in 0..wo {
                            let ix = (2 * ox + kx) as isize - 1;
                            if ix >= 0 && ix < w as isize {
                                let gv = g[oy * wo + ox];
                                acc += gv * src[base + ix as usize];
                                dsrc[base + ix as usize] += gv * wv;
                            }
                        }
                    }
                    dweight[widx] += acc;
                }
            }
        }
    }
    din
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Classifier {
    /// Fan-in scaled uniform initialization; biases start at zero.
    pub fn new(input: InputSpec, seed: u64) -> Self {
        let mut model = Self::zeros(input);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = model.layout;
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, gain: f64| {
            let bound = (gain / fan_in as f64).sqrt();
            for p in &mut model.params[range] {
                *p = rng.gen_range(-bound..bound);
            }
        };
        fill(l.conv1_w..l.conv1_b, input.channels * K * K, 6.0);
        fill(l.conv2_w..l.conv2_b, C1 * K * K, 6.0);
        fill(l.fc_w..l.fc_b, C2, 3.0);
        model
    }

    pub fn zeros(input: InputSpec) -> Self {
        let layout = Layout::new(input.channels);
        Self {
            input,
            layout,
            params: vec![0.0; layout.total],
        }
    }

    pub fn input_spec(&self) -> InputSpec {
        self.input
    }

    /// Architecture line used by checkpoints.
    pub fn descriptor(&self) -> String {
        format!(
            "netlite in={}x{}x{} {}",
            self.input.channels, self.input.height, self.input.width, ARCHITECTURE
        )
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn tensors(&self) -> Vec<NamedTensor> {
        let l = self.layout;
        let c = self.input.channels;
        let t = |name, dims: Vec<usize>, r: std::ops::Range<usize>| NamedTensor {
            name,
            dims,
            data: self.params[r].to_vec(),
        };
        vec![
            t("conv1.weight", vec![C1, c, K, K], l.conv1_w..l.conv1_b),
            t("conv1.bias", vec![C1], l.conv1_b..l.conv2_w),
            t("conv2.weight", vec![C2, C1, K, K], l.conv2_w..l.conv2_b),
            t("conv2.bias", vec![C2], l.conv2_b..l.fc_w),
            t("fc.weight", vec![1, C2], l.fc_w..l.fc_b),
            t("fc.bias", vec![1], l.fc_b..l.total),
        ]
    }

    /// Rebuilds a model from tensors in [`Classifier::tensors`] order.
    pub fn from_tensors(input: InputSpec, tensors: &[(Vec<usize>, Vec<f64>)]) -> Result<Self> {
        let mut model = Self::zeros(input);
        let expected = model.tensors();
        if tensors.len() != expected.len() {
            return Err(shape_err(
                format!("{} tensors", expected.len()),
                format!("{} tensors", tensors.len()),
            ));
        }
        let mut params = Vec::with_capacity(model.params.len());
        for (want, (dims, data)) in expected.iter().zip(tensors) {
            if &want.dims != dims || data.len() != want.data.len() {
                return Err(shape_err(
                    format!("{} {:?}", want.name, want.dims),
                    format!("{dims:?}"),
                ));
            }
            params.extend_from_slice(data);
        }
        model.params = params;
        Ok(model)
    }

    fn check_input(&self, x: &Planes) -> Result<()> {
        let got = InputSpec::of(x);
        if got != self.input {
            return Err(shape_err(
                format!(
                    "{}x{}x{}",
                    self.input.channels, self.input.height, self.input.width
                ),
                format!("{}x{}x{}", got.channels, got.height, got.width),
            ));
        }
        Ok(())
    }

    /// Probability that `x` is fake.
    pub fn forward(&self, x: &Planes) -> Result<f64> {
        let mut trace = Trace::default();
        self.forward_traced(x, &mut trace)
    }

    pub fn forward_traced(&self, x: &Planes, trace: &mut Trace) -> Result<f64> {
        self.check_input(x)?;
        let l = self.layout;
        let p = &self.params;
        let (c, h, w) = (self.input.channels, self.input.height, self.input.width);
        let (h1, w1) = (conv_out(h), conv_out(w));
        let (h2, w2) = (conv_out(h1), conv_out(w1));

        let z1 = conv_forward(
            x.as_slice(),
            c,
            h,
            w,
            &p[l.conv1_w..l.conv1_b],
            &p[l.conv1_b..l.conv2_w],
            C1,
        );
        let a1: Vec<f64> = z1.iter().map(|v| v.max(0.0)).collect();
        let z2 = conv_forward(
            &a1,
            C1,
            h1,
            w1,
            &p[l.conv2_w..l.conv2_b],
            &p[l.conv2_b..l.fc_w],
            C2,
        );
        let n2 = (h2 * w2) as f64;
        let pooled: Vec<f64> = z2
            .chunks_exact(h2 * w2)
            .map(|ch| ch.iter().map(|v| v.max(0.0)).sum::<f64>() / n2)
            .collect();
        let logit = p[l.fc_b]
            + pooled
                .iter()
                .zip(&p[l.fc_w..l.fc_b])
                .map(|(a, b)| a * b)
                .sum::<f64>();
        let prob = sigmoid(logit);
        trace.inner = Some(TraceData {
            input: x.clone(),
            z1,
            a1,
            z2,
            pooled,
            prob,
        });
        Ok(prob)
    }

    /// Gradients given `dL/dp` for the output probability of the traced pass.
    pub fn backward(&self, trace: &Trace, grad_prob: f64) -> Result<Gradients> {
        let p = trace.prob().ok_or(Error::NoForwardCache)?;
        self.backward_logit(trace, grad_prob * p * (1.0 - p))
    }

    /// Gradients given `dL/dz` for the pre-sigmoid logit.
    pub fn backward_logit(&self, trace: &Trace, grad_logit: f64) -> Result<Gradients> {
        let t = trace.inner.as_ref().ok_or(Error::NoForwardCache)?;
        let l = self.layout;
        let p = &self.params;
        let (c, h, w) = (self.input.channels, self.input.height, self.input.width);
        let (h1, w1) = (conv_out(h), conv_out(w));
        let (h2, w2) = (conv_out(h1), conv_out(w1));
        let mut g = vec![0.0; l.total];

        g[l.fc_b] = grad_logit;
        for (i, a) in t.pooled.iter().enumerate() {
            g[l.fc_w + i] = grad_logit * a;
        }
        let n2 = (h2 * w2) as f64;
        let mut dz2 = vec![0.0; t.z2.len()];
        for (ch, (dst, src)) in dz2
            .chunks_exact_mut(h2 * w2)
            .zip(t.z2.chunks_exact(h2 * w2))
            .enumerate()
        {
            let dpool = grad_logit * p[l.fc_w + ch] / n2;
            for (d, z) in dst.iter_mut().zip(src) {
                if *z > 0.0 {
                    *d = dpool;
                }
            }
        }
        let (g1, g2) = g.split_at_mut(l.conv2_w);
        let (g2w, g2b) = g2[..l.fc_w - l.conv2_w].split_at_mut(l.conv2_b - l.conv2_w);
        let mut da1 = conv_backward(
            &t.a1,
            C1,
            h1,
            w1,
            &p[l.conv2_w..l.conv2_b],
            C2,
            &dz2,
            g2w,
            g2b,
        );
        for (d, z) in da1.iter_mut().zip(&t.z1) {
            if *z <= 0.0 {
                *d = 0.0;
            }
        }
        let (g1w, g1b) = g1.split_at_mut(l.conv1_b);
        let dx = conv_backward(
            t.input.as_slice(),
            c,
            h,
            w,
            &p[l.conv1_w..l.conv1_b],
            C1,
            &da1,
            g1w,
            g1b,
        );
        Ok(Gradients {
            params: g,
            input: Planes::new(c, h, w, dx)?,
        })
    }
}

pub const CE_EPS: f64 = 1e-12;

/// Binary cross-entropy with `p` clamped to `[eps, 1 - eps]`.
pub fn cross_entropy(p: f64, y: Label) -> f64 {
    let p = p.clamp(CE_EPS, 1.0 - CE_EPS);
    match y {
        Label::Fake => -p.ln(),
        Label::Real => -(1.0 - p).ln(),
    }
}

/// `d CE / d logit` for a sigmoid output.
pub fn cross_entropy_logit_grad(p: f64, y: Label) -> f64 {
    p - y.as_f64()
}

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(shape_err(
                format!("{} parameters", self.m.len()),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient",
                index,
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 16,
            lr: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Classifier,
    /// Mean cross-entropy per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Loss and summed parameter gradient over a batch, in input order.
pub fn batch_loss_and_grad(
    model: &Classifier,
    batch: &[(&Planes, Label)],
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; model.num_params()];
    let mut loss = 0.0;
    for (x, y) in batch {
        let mut trace = Trace::default();
        let p = model.forward_traced(x, &mut trace)?;
        loss += cross_entropy(p, *y);
        let g = model.backward_logit(&trace, cross_entropy_logit_grad(p, *y))?;
        for (a, b) in grad.iter_mut().zip(&g.params) {
            *a += b;
        }
    }
    Ok((loss, grad))
}

/// Mini-batch Adam on mean cross-entropy over a seeded shuffle.
pub fn train_classifier(
    model: Classifier,
    data: &[(Planes, Label)],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if !data.iter().any(|(_, y)| *y == Label::Real) || !data.iter().any(|(_, y)| *y == Label::Fake)
    {
        return Err(Error::Experiment(
            "training data must contain both real and fake items".into(),
        ));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidParameter("batch size must be >= 1".into()));
    }
    let mut model = model;
    let mut adam = AdamState::new(model.num_params(), cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<(&Planes, Label)> = chunk.iter().map(|&i| (&data[i].0, data[i].1)).collect();
            let (loss, mut grad) = batch_loss_and_grad(&model, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    step,
                    detail: format!("loss {loss}"),
                });
            }
            total += loss;
            let n = batch.len() as f64;
            grad.iter_mut().for_each(|g| *g /= n);
            adam.step(model.params_mut(), &grad).map_err(|e| Error::Diverged {
                epoch,
                step,
                detail: e.to_string(),
            })?;
        }
        epoch_losses.push(total / data.len() as f64);
    }
    Ok(TrainOutcome {
        model,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_planes(c: usize, h: usize, w: usize, seed: u64) -> Planes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Planes::new(c, h, w, (0..c * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_model_outputs_half() {
        let spec = InputSpec::new(1, 8, 8);
        let m = Classifier::zeros(spec);
        for s in 0..3 {
            assert_eq!(m.forward(&random_planes(1, 8, 8, s)).unwrap(), 0.5);
        }
    }

    #[test]
    fn forward_is_deterministic_and_scaling_by_zero_matches_zero_image() {
        let spec = InputSpec::new(2, 9, 7);
        let m = Classifier::new(spec, 4);
        let x = random_planes(2, 9, 7, 1);
        assert_eq!(m.forward(&x).unwrap(), m.forward(&x).unwrap());
        assert_eq!(
            m.forward(&x.scaled(0.0)).unwrap(),
            m.forward(&Planes::zeros(2, 9, 7)).unwrap()
        );
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let m = Classifier::new(InputSpec::new(1, 8, 8), 0);
        assert!(m.forward(&Planes::zeros(1, 8, 9)).is_err());
        assert!(m.forward(&Planes::zeros(3, 8, 8)).is_err());
    }

    #[test]
    fn backward_without_forward_fails() {
        let m = Classifier::new(InputSpec::new(1, 4, 4), 0);
        assert!(matches!(
            m.backward(&Trace::default(), 1.0),
            Err(Error::NoForwardCache)
        ));
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let m = Classifier::new(InputSpec::new(1, 8, 8), 2);
        let mut t = Trace::default();
        m.forward_traced(&random_planes(1, 8, 8, 3), &mut t).unwrap();
        let g = m.backward(&t, 0.0).unwrap();
        assert!(g.params.iter().all(|&v| v == 0.0));
        assert!(g.input.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cross_entropy_values() {
        assert!((cross_entropy(0.5, Label::Real) - 2f64.ln()).abs() < 1e-15);
        assert!((cross_entropy(0.5, Label::Fake) - 2f64.ln()).abs() < 1e-15);
        assert!(cross_entropy(1.0, Label::Fake) < 1e-11);
        assert!(cross_entropy(0.0, Label::Real) < 1e-11);
        assert!((cross_entropy(0.9, Label::Real) - 2.302585).abs() < 1e-6);
        assert!(cross_entropy(0.0, Label::Fake).is_finite());
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut adam = AdamState::new(3, 0.1);
        let mut p = vec![1.0, -2.0, 3.0];
        adam.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        let mut adam = AdamState::new(3, 1e-3);
        let mut p = vec![0.0; 3];
        adam.step(&mut p, &[0.5, -4.0, 1e-3]).unwrap();
        // mhat = g, vhat = g^2, so the update is lr * g / (|g| + eps)
        for (v, g) in p.iter().zip([0.5f64, -4.0, 1e-3]) {
            let expected = -1e-3 * g / (g.abs() + 1e-8);
            assert!((v - expected).abs() < 1e-15);
            assert!((v.abs() - 1e-3).abs() < 1e-7);
        }
    }

    #[test]
    fn adam_is_deterministic_and_rejects_nan() {
        let mut a = AdamState::new(2, 0.01);
        let mut b = a.clone();
        let (mut pa, mut pb) = (vec![1.0, 2.0], vec![1.0, 2.0]);
        a.step(&mut pa, &[0.3, -0.1]).unwrap();
        b.step(&mut pb, &[0.3, -0.1]).unwrap();
        assert_eq!(pa, pb);
        assert_eq!(a, b);
        assert!(a.step(&mut pa, &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn checkpoint_tensors_round_trip() {
        let spec = InputSpec::new(3, 8, 8);
        let m = Classifier::new(spec, 9);
        let ts: Vec<(Vec<usize>, Vec<f64>)> =
            m.tensors().into_iter().map(|t| (t.dims, t.data)).collect();
        assert_eq!(Classifier::from_tensors(spec, &ts).unwrap(), m);
        assert!(Classifier::from_tensors(InputSpec::new(1, 8, 8), &ts).is_err());
    }

    fn separable_set(n: usize) -> Vec<(Planes, Label)> {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        (0..n)
            .map(|i| {
                let label = if i % 2 == 0 { Label::Real } else { Label::Fake };
                let level = if label == Label::Fake { 1.0 } else { 0.0 };
                let data = (0..64).map(|_| level + rng.gen_range(-0.3..0.3)).collect();
                (Planes::new(1, 8, 8, data).unwrap(), label)
            })
            .collect()
    }

    #[test]
    fn zero_lr_keeps_parameters() {
        let m = Classifier::new(InputSpec::new(1, 8, 8), 1);
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 4,
            lr: 0.0,
            seed: 3,
        };
        let out = train_classifier(m.clone(), &separable_set(8), &cfg).unwrap();
        assert_eq!(out.model, m);
    }

    #[test]
    fn separable_set_is_learned() {
        let data = separable_set(64);
        let cfg = TrainConfig {
            epochs: 20,
            batch_size: 8,
            lr: 1e-2,
            seed: 5,
        };
        let out = train_classifier(Classifier::new(InputSpec::new(1, 8, 8), 2), &data, &cfg)
            .unwrap();
        let correct = data
            .iter()
            .filter(|(x, y)| (out.model.forward(x).unwrap() > 0.5) == (*y == Label::Fake))
            .count();
        assert_eq!(correct, data.len());
        let l = &out.epoch_losses;
        assert!(l.last().unwrap() < l.first().unwrap());
        let again = train_classifier(Classifier::new(InputSpec::new(1, 8, 8), 2), &data, &cfg)
            .unwrap();
        assert_eq!(again.epoch_losses, out.epoch_losses);
    }

    #[test]
    fn training_requires_both_classes() {
        let data: Vec<_> = separable_set(8)
            .into_iter()
            .filter(|(_, y)| *y == Label::Fake)
            .collect();
        let m = Classifier::new(InputSpec::new(1, 8, 8), 1);
        assert!(train_classifier(m, &data, &TrainConfig::default()).is_err());
    }
}
