//! Command-line surface for `bihpf-core`.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bihpf_core::acm::{
    average_maps_with, compare_original_vs_compressed, compute_wc, train_acm, AcmItem,
};
use bihpf_core::bihpf::{bihpf_features, filtered_spectrum, ColorMode};
use bihpf_core::evalkit::{evaluate, run_cross_domain, run_sweep, FeatureKind, SweepKind};
use bihpf_core::io::{
    self, load_classifier, load_map_params, read_experiment, read_pnm, save_classifier,
    save_map_params, save_tensor, write_atomic, write_experiment, write_pgm, RunConfig, Tensor,
};
use bihpf_core::numerics::{to_grayscale, Planes, RgbImage};
use bihpf_core::synthlab::{build_experiment, Experiment, LabeledDataset};
use bihpf_core::{Error, Label};
use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bihpf", version, about = "Synthesized-image detection with bilateral high-pass filters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic experiment (train/test datasets) into a directory.
    SynthGen {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn one PNM image into a BiHPF feature tensor.
    Preprocess(PreprocessArgs),
    /// Train a classifier on BiHPF features of a dataset's training split.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Experiment directory written by `synth-gen`; generated from the config when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Checkpoint path.
        #[arg(long)]
        out: PathBuf,
        /// Optional per-epoch loss CSV.
        #[arg(long)]
        losses: Option<PathBuf>,
    },
    /// Adversarially train a classifier and compression map on raw images.
    AcmTrain {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output directory for `classifier.ckpt`, `map.f32t` and `history.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Averaged compression/artifact maps and original-vs-compressed accuracy.
    AcmAnalyze {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Output directory for `wc.pgm`, `artifact.pgm` and `compare.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-domain evaluation; writes `domain,acc,ap` CSV.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Evaluate this checkpoint instead of training a new classifier.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Save the trained classifier here.
        #[arg(long)]
        save_model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parameter sweep; writes `param,domain,acc,ap` CSV.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        /// cutoff-hpf, cutoff-lpf, sigma, ablation-LF or rgb-vs-gray.
        #[arg(long)]
        kind: String,
        /// Comma-separated values for numeric sweeps.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Configuration shared by every run: a key=value file plus overrides.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from desk-scale defaults (64×64) instead of full-scale ones.
    #[arg(long)]
    pub desk: bool,
    /// Override a config key; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, Error> {
        let base = if self.desk {
            RunConfig::desk()
        } else {
            RunConfig::default()
        };
        let mut cfg = match &self.config {
            Some(p) => RunConfig::parse_over(base, &std::fs::read_to_string(p)?)?,
            None => base,
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{kv}' is not key=value")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 40.0)]
    pub cutoff: f64,
    #[arg(long)]
    pub no_pixel_hpf: bool,
    #[arg(long)]
    pub no_freq_hpf: bool,
    #[arg(long)]
    pub low_pass: bool,
    /// Per-channel features instead of grayscale.
    #[arg(long)]
    pub rgb: bool,
    /// Also write a PGM preview of the log filtered spectrum.
    #[arg(long)]
    pub preview: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn load_or_build(data: Option<&Path>, cfg: &RunConfig) -> Result<Experiment, Error> {
    let data = data.map(Path::to_path_buf).or_else(|| cfg.data.clone());
    let exp = match data {
        Some(dir) => read_experiment(&dir)?,
        None => build_experiment(&cfg.experiment()?)?,
    };
    if exp.test.is_empty() {
        return Err(Error::Experiment("no test domains".into()));
    }
    Ok(exp)
}

fn gray_items(ds: &LabeledDataset, color: ColorMode) -> Vec<(Planes, Label)> {
    ds.records
        .iter()
        .map(|r| {
            let x = match color {
                ColorMode::Gray => Planes::from_gray(&to_grayscale(&r.image)),
                ColorMode::Rgb => Planes::from_rgb(&r.image),
            };
            (x, r.label)
        })
        .collect()
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::SynthGen { run, out } => {
            let cfg = run.resolve()?;
            let exp = build_experiment(&cfg.experiment()?)?;
            write_experiment(&out, &exp)?;
            write_atomic(&out.join("run.cfg"), cfg.to_text().as_bytes())?;
            eprintln!(
                "wrote {} train and {} test images to {}",
                exp.train.len(),
                exp.test.iter().map(|(_, d)| d.len()).sum::<usize>(),
                out.display()
            );
            Ok(())
        }
        Command::Preprocess(args) => preprocess(&args),
        Command::Train {
            run,
            data,
            out,
            losses,
        } => {
            let cfg = run.resolve()?;
            let exp = load_or_build(data.as_deref(), &cfg)?;
            let kind = FeatureKind::Spectrum(cfg.bihpf()?);
            let items = kind.extract_all(&exp.train)?;
            let first = items.first().ok_or(Error::Empty("training split"))?;
            let model = bihpf_core::netlite::Classifier::new(
                bihpf_core::netlite::InputSpec::of(&first.0),
                cfg.seed,
            );
            let outcome = bihpf_core::netlite::train_classifier(model, &items, &cfg.train_config())?;
            save_classifier(&out, &outcome.model)?;
            if let Some(p) = losses {
                let mut csv = String::from("epoch,loss\n");
                for (i, l) in outcome.epoch_losses.iter().enumerate() {
                    let _ = writeln!(csv, "{},{l:.6}", i + 1);
                }
                write_atomic(&p, csv.as_bytes())?;
            }
            Ok(())
        }
        Command::AcmTrain { run, data, out } => {
            let cfg = run.resolve()?;
            let exp = load_or_build(data.as_deref(), &cfg)?;
            let items: Vec<AcmItem> = gray_items(&exp.train, cfg.color)
                .into_iter()
                .map(|(x, y)| AcmItem::new(x, y))
                .collect();
            let result = train_acm(&items, &cfg.acm_config())?;
            save_classifier(&out.join("classifier.ckpt"), &result.classifier)?;
            save_map_params(&out.join("map.f32t"), &result.params)?;
            let mut csv = String::from("epoch,loss_c,loss_adv,mean_wc,imag_residual\n");
            for (i, h) in result.history.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{},{:.6},{:.6},{:.6},{:.3e}",
                    i + 1,
                    h.loss_c,
                    h.loss_adv,
                    h.mean_wc,
                    h.imag_residual
                );
            }
            write_atomic(&out.join("history.csv"), csv.as_bytes())
        }
        Command::AcmAnalyze {
            run,
            data,
            model,
            map,
            out,
        } => {
            let cfg = run.resolve()?;
            let exp = load_or_build(data.as_deref(), &cfg)?;
            let classifier = load_classifier(&model)?;
            let wc = compute_wc(&load_map_params(&map)?);
            let train: Vec<Planes> = gray_items(&exp.train, cfg.color)
                .into_iter()
                .map(|(x, _)| x)
                .collect();
            let maps = average_maps_with(&train, &wc)?;
            let (h, w) = (wc.height(), wc.width());
            write_pgm(&out.join("wc.pgm"), &io::preview_image(h, w, &maps.wc_display.data)?)?;
            write_pgm(
                &out.join("artifact.pgm"),
                &io::preview_image(h, w, &maps.mean_abs_artifact.data)?,
            )?;
            let domains: Vec<(String, Vec<(Planes, Label)>)> = exp
                .test
                .iter()
                .map(|(n, d)| (n.clone(), gray_items(d, cfg.color)))
                .collect();
            let rows = compare_original_vs_compressed(&classifier, &wc, &domains)?;
            let mut csv = String::from("domain,acc_original,acc_compressed\n");
            for r in rows {
                let _ = writeln!(csv, "{},{:.6},{:.6}", r.domain, r.acc_original, r.acc_compressed);
            }
            write_atomic(&out.join("compare.csv"), csv.as_bytes())
        }
        Command::Eval {
            run,
            data,
            model,
            save_model,
            out,
        } => {
            let cfg = run.resolve()?;
            let exp = load_or_build(data.as_deref(), &cfg)?;
            let kind = FeatureKind::Spectrum(cfg.bihpf()?);
            let result = match model {
                Some(p) => {
                    let classifier = load_classifier(&p)?;
                    let domains = exp
                        .test
                        .iter()
                        .map(|(n, d)| Ok((n.clone(), kind.extract_all(d)?)))
                        .collect::<Result<Vec<_>, Error>>()?;
                    evaluate(&classifier, &exp.train_domain, &domains)?
                }
                None => {
                    let run = run_cross_domain(&kind, &exp, &cfg.train_config())?;
                    if let Some(p) = save_model {
                        save_classifier(&p, &run.model)?;
                    }
                    run.result
                }
            };
            write_atomic(&out, result.to_csv().as_bytes())
        }
        Command::Sweep {
            run,
            data,
            kind,
            values,
            out,
        } => {
            let kind: SweepKind = kind.parse()?;
            let cfg = run.resolve()?;
            let exp = load_or_build(data.as_deref(), &cfg)?;
            let result = run_sweep(kind, &values, &cfg.bihpf()?, &exp, &cfg.train_config())?;
            write_atomic(&out, result.to_csv().as_bytes())
        }
    }
}

fn preprocess(args: &PreprocessArgs) -> Result<(), Error> {
    let img: RgbImage = read_pnm(&args.input)?.into_rgb();
    let mut cfg = bihpf_core::bihpf::BihpfConfig::new(args.sigma, args.cutoff)?
        .with_filters(!args.no_pixel_hpf, !args.no_freq_hpf)
        .with_color(if args.rgb { ColorMode::Rgb } else { ColorMode::Gray });
    if args.low_pass {
        cfg.hpf = bihpf_core::bihpf::FreqHpfSpec::low_pass(args.cutoff)?;
    }
    let features = bihpf_features(&img, &cfg)?;
    let dims = vec![features.channels(), features.height(), features.width()];
    save_tensor(&args.out, &Tensor::from_f64(dims, features.as_slice())?)?;
    if let Some(p) = &args.preview {
        let m = filtered_spectrum(&to_grayscale(&img), &cfg)?;
        let logv: Vec<f64> = m.as_slice().iter().map(|v| v.ln_1p()).collect();
        write_pgm(p, &io::preview_image(m.height(), m.width(), &logv)?)?;
    }
    Ok(())
}
