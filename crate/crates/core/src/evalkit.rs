//! Metrics and the cross-domain evaluation harness.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::bihpf::{bihpf_features, BihpfConfig, ColorMode, FreqHpfSpec, LogFilterSpec};
use crate::error::{Error, Result};
use crate::netlite::{train_classifier, Classifier, InputSpec, TrainConfig};
use crate::numerics::{Planes, RgbImage};
use crate::synthlab::{Experiment, LabeledDataset};
use crate::Label;

/// Fraction of correct decisions at threshold 0.5; a score of exactly 0.5 counts as real.
pub fn accuracy(scores: &[f64], labels: &[Label]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| (s > 0.5) == (y == Label::Fake))
        .count();
    Ok(correct as f64 / scores.len() as f64)
}

/// Average precision of the fake class.
///
/// Precision is accumulated at every distinct score threshold, so tied scores
/// enter together: `AP = sum_k (R_k - R_{k-1}) P_k`.
pub fn average_precision(scores: &[f64], labels: &[Label]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let positives = labels.iter().filter(|&&y| y == Label::Fake).count();
    if positives == 0 {
        return Err(Error::InvalidParameter(
            "average precision needs at least one fake item".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let mut new_tp = 0;
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == Label::Fake {
                new_tp += 1;
            }
            seen += 1;
            i += 1;
        }
        tp += new_tp;
        ap += new_tp as f64 / positives as f64 * (tp as f64 / seen as f64);
    }
    Ok(ap)
}

fn check_inputs(scores: &[f64], labels: &[Label]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::Empty("prediction set"));
    }
    if scores.len() != labels.len() {
        return Err(crate::error::shape_err(
            format!("{} labels", scores.len()),
            format!("{}", labels.len()),
        ));
    }
    crate::error::check_finite("scores", scores)
}

/// What the classifier sees.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureKind {
    /// Raw RGB pixels.
    Pixels,
    /// Filtered, normalized magnitude spectra.
    Spectrum(BihpfConfig),
}

impl FeatureKind {
    pub fn extract(&self, img: &RgbImage) -> Result<Planes> {
        match self {
            FeatureKind::Pixels => Ok(Planes::from_rgb(img)),
            FeatureKind::Spectrum(cfg) => bihpf_features(img, cfg),
        }
    }

    pub fn extract_all(&self, ds: &LabeledDataset) -> Result<Vec<(Planes, Label)>> {
        ds.records
            .iter()
            .map(|r| Ok((self.extract(&r.image)?, r.label)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainRow {
    pub domain: String,
    pub accuracy: f64,
    pub average_precision: f64,
}

/// Aggregate over a group of domain rows (unweighted mean).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupScore {
    pub accuracy: f64,
    pub average_precision: f64,
    pub domains: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub train_domain: String,
    /// Pooled over every test item.
    pub accuracy: f64,
    pub average_precision: f64,
    pub rows: Vec<DomainRow>,
}

impl EvalResult {
    fn group(&self, keep: impl Fn(&DomainRow) -> bool) -> Option<GroupScore> {
        let rows: Vec<&DomainRow> = self.rows.iter().filter(|r| keep(r)).collect();
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        Some(GroupScore {
            accuracy: rows.iter().map(|r| r.accuracy).sum::<f64>() / n,
            average_precision: rows.iter().map(|r| r.average_precision).sum::<f64>() / n,
            domains: rows.len(),
        })
    }

    /// Domains equal to the training domain.
    pub fn test_group(&self) -> Option<GroupScore> {
        self.group(|r| r.domain == self.train_domain)
    }

    /// Domains unseen during training.
    pub fn cross_group(&self) -> Option<GroupScore> {
        self.group(|r| r.domain != self.train_domain)
    }

    pub fn all_group(&self) -> Option<GroupScore> {
        self.group(|_| true)
    }

    /// `domain,acc,ap` lines, followed by `group:test|cross|all` summary lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("domain,acc,ap\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.6},{:.6}", r.domain, r.accuracy, r.average_precision);
        }
        for (name, g) in self.groups() {
            let _ = writeln!(out, "group:{name},{:.6},{:.6}", g.accuracy, g.average_precision);
        }
        out
    }

    fn groups(&self) -> Vec<(&'static str, GroupScore)> {
        [
            ("test", self.test_group()),
            ("cross", self.cross_group()),
            ("all", self.all_group()),
        ]
        .into_iter()
        .filter_map(|(n, g)| g.map(|g| (n, g)))
        .collect()
    }
}

/// Scores `model` on every test domain.
pub fn evaluate(
    model: &Classifier,
    train_domain: &str,
    domains: &[(String, Vec<(Planes, Label)>)],
) -> Result<EvalResult> {
    if domains.is_empty() {
        return Err(Error::Experiment("no test domains".into()));
    }
    let (mut all_scores, mut all_labels) = (Vec::new(), Vec::new());
    let mut rows = Vec::with_capacity(domains.len());
    for (domain, items) in domains {
        if items.is_empty() {
            return Err(Error::Experiment(format!("test domain '{domain}' is empty")));
        }
        let scores = items
            .iter()
            .map(|(x, _)| model.forward(x))
            .collect::<Result<Vec<f64>>>()?;
        let labels: Vec<Label> = items.iter().map(|(_, y)| *y).collect();
        rows.push(DomainRow {
            domain: domain.clone(),
            accuracy: accuracy(&scores, &labels)?,
            average_precision: average_precision(&scores, &labels)?,
        });
        all_scores.extend(scores);
        all_labels.extend(labels);
    }
    Ok(EvalResult {
        train_domain: train_domain.to_string(),
        accuracy: accuracy(&all_scores, &all_labels)?,
        average_precision: average_precision(&all_scores, &all_labels)?,
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct CrossDomainRun {
    pub result: EvalResult,
    pub model: Classifier,
    pub epoch_losses: Vec<f64>,
}

/// Trains a fresh classifier on the experiment's training split and evaluates every test domain.
pub fn run_cross_domain(
    kind: &FeatureKind,
    experiment: &Experiment,
    train: &TrainConfig,
) -> Result<CrossDomainRun> {
    if experiment.test.is_empty() {
        return Err(Error::Experiment("no test domains".into()));
    }
    let data = kind.extract_all(&experiment.train)?;
    let first = data.first().ok_or(Error::Empty("training split"))?;
    let model = Classifier::new(InputSpec::of(&first.0), train.seed);
    let outcome = train_classifier(model, &data, train)?;
    let domains = experiment
        .test
        .iter()
        .map(|(name, ds)| Ok((name.clone(), kind.extract_all(ds)?)))
        .collect::<Result<Vec<_>>>()?;
    let result = evaluate(&outcome.model, &experiment.train_domain, &domains)?;
    Ok(CrossDomainRun {
        result,
        model: outcome.model,
        epoch_losses: outcome.epoch_losses,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepKind {
    /// Frequency HPF cutoff values.
    CutoffHpf,
    /// Low-pass counterpart at the same cutoff values.
    CutoffLpf,
    /// LoG scale values.
    Sigma,
    /// The four on/off combinations of the two filters.
    AblationLf,
    /// Grayscale vs per-channel RGB features.
    RgbVsGray,
}

impl SweepKind {
    pub const ALL: [SweepKind; 5] = [
        SweepKind::CutoffHpf,
        SweepKind::CutoffLpf,
        SweepKind::Sigma,
        SweepKind::AblationLf,
        SweepKind::RgbVsGray,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::CutoffHpf => "cutoff-hpf",
            SweepKind::CutoffLpf => "cutoff-lpf",
            SweepKind::Sigma => "sigma",
            SweepKind::AblationLf => "ablation-LF",
            SweepKind::RgbVsGray => "rgb-vs-gray",
        }
    }

    /// Whether the sweep takes numeric parameter values.
    pub fn is_numeric(self) -> bool {
        matches!(self, SweepKind::CutoffHpf | SweepKind::CutoffLpf | SweepKind::Sigma)
    }

    /// `(param label, feature config)` per sweep point, derived from `base`.
    pub fn points(self, values: &[f64], base: &BihpfConfig) -> Result<Vec<(String, BihpfConfig)>> {
        if self.is_numeric() && values.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "sweep '{}' needs at least one value",
                self.name()
            )));
        }
        let mut out = Vec::new();
        match self {
            SweepKind::CutoffHpf | SweepKind::CutoffLpf => {
                for &v in values {
                    let hpf = if self == SweepKind::CutoffHpf {
                        FreqHpfSpec::high_pass(v)?
                    } else {
                        FreqHpfSpec::low_pass(v)?
                    };
                    let mut cfg = base.clone();
                    cfg.hpf = hpf;
                    cfg.enable_freq_hpf = true;
                    out.push((fmt_value(v), cfg));
                }
            }
            SweepKind::Sigma => {
                for &v in values {
                    let mut cfg = base.clone();
                    cfg.log = LogFilterSpec::new(v)?;
                    cfg.enable_pixel_hpf = true;
                    out.push((fmt_value(v), cfg));
                }
            }
            SweepKind::AblationLf => {
                for (name, l, f) in [
                    ("none", false, false),
                    ("L", true, false),
                    ("F", false, true),
                    ("LF", true, true),
                ] {
                    out.push((name.to_string(), base.clone().with_filters(l, f)));
                }
            }
            SweepKind::RgbVsGray => {
                out.push(("gray".into(), base.clone().with_color(ColorMode::Gray)));
                out.push(("rgb".into(), base.clone().with_color(ColorMode::Rgb)));
            }
        }
        Ok(out)
    }
}

fn fmt_value(v: f64) -> String {
    format!("{v}")
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown sweep kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub param: String,
    pub result: EvalResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// `param,domain,acc,ap` lines, including the `group:*` summaries.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,domain,acc,ap\n");
        for p in &self.points {
            for line in p.result.to_csv().lines().skip(1) {
                let _ = writeln!(out, "{},{line}", p.param);
            }
        }
        out
    }

    pub fn point(&self, param: &str) -> Option<&EvalResult> {
        self.points.iter().find(|p| p.param == param).map(|p| &p.result)
    }
}

/// One full cross-domain run per sweep point.
pub fn run_sweep(
    kind: SweepKind,
    values: &[f64],
    base: &BihpfConfig,
    experiment: &Experiment,
    train: &TrainConfig,
) -> Result<SweepResult> {
    let mut points = Vec::new();
    for (param, cfg) in kind.points(values, base)? {
        let run = run_cross_domain(&FeatureKind::Spectrum(cfg), experiment, train)?;
        points.push(SweepPoint {
            param,
            result: run.result,
        });
    }
    Ok(SweepResult { kind, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Fake as F, Real as R};

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0.9, 0.2, 0.6, 0.4], &[F, R, R, F]).unwrap(), 0.5);
        assert_eq!(accuracy(&[0.5], &[R]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.5], &[F]).unwrap(), 0.0);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[0.1], &[R, F]).is_err());
    }

    #[test]
    fn ap_examples() {
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[F, R, F, F]).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0 + 3.0 / 4.0) / 3.0).abs() < 1e-12);
        assert_eq!(average_precision(&[0.9, 0.1], &[F, R]).unwrap(), 1.0);
        assert!(average_precision(&[0.9, 0.1], &[R, R]).is_err());
    }

    #[test]
    fn ap_constant_scores_is_prevalence() {
        let labels = [F, R, R, F, R];
        let ap = average_precision(&[0.3; 5], &labels).unwrap();
        assert!((ap - 0.4).abs() < 1e-12);
    }
}
