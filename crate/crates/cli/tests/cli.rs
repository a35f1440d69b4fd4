use std::fs;
use std::path::Path;

use bihpf_cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use bihpf_core::io::{encode_pgm, load_tensor, read_experiment, PnmImage};
use bihpf_core::numerics::GrayImage;

const TINY: [&str; 8] = [
    "--desk",
    "--set",
    "size=32",
    "--set",
    "train_per_class=6",
    "--set",
    "test_per_class=4",
    "--set=epochs=1",
];

fn bihpf(args: &[&str]) -> i32 {
    run(std::iter::once("bihpf").chain(args.iter().copied()))
}

fn with_tiny<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(TINY.iter()).chain(tail.iter()).copied().collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bihpf(&["no-such-command"]), EXIT_USAGE);
    assert_eq!(bihpf(&["eval", "--bogus-flag"]), EXIT_USAGE);
    assert_eq!(bihpf(&[]), EXIT_USAGE);
}

#[test]
fn help_exits_zero() {
    assert_eq!(bihpf(&["--help"]), EXIT_OK);
    assert_eq!(bihpf(&["sweep", "--help"]), EXIT_OK);
}

#[test]
fn preprocess_writes_single_channel_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let (h, w) = (24, 40);
    let img = GrayImage::from_fn(h, w, |y, x| ((x * 7 + y * 3) % 11) as f64 / 10.0);
    let input = dir.path().join("x.pgm");
    fs::write(&input, encode_pgm(&img)).unwrap();
    let out = dir.path().join("x.f32t");
    let preview = dir.path().join("x-spec.pgm");
    let code = bihpf(&[
        "preprocess",
        "--in",
        p(&input),
        "--out",
        p(&out),
        "--sigma",
        "0.01",
        "--cutoff",
        "40",
        "--preview",
        p(&preview),
    ]);
    assert_eq!(code, EXIT_OK);
    let t = load_tensor(&out).unwrap();
    assert_eq!(t.dims, vec![1, h, w]);
    assert!(t.data.iter().all(|v| v.is_finite()));
    let bytes = fs::read(&preview).unwrap();
    match bihpf_core::io::decode_pnm(&bytes).unwrap() {
        PnmImage::Gray(g) => assert_eq!((g.height(), g.width()), (h, w)),
        PnmImage::Rgb(_) => panic!("preview should be grayscale"),
    }
}

#[test]
fn preprocess_rgb_writes_three_channels() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage::from_fn(16, 16, |y, x| ((x + y) % 2) as f64);
    let input = dir.path().join("x.pgm");
    fs::write(&input, encode_pgm(&img)).unwrap();
    let out = dir.path().join("x.f32t");
    let code = bihpf(&["preprocess", "--in", p(&input), "--out", p(&out), "--rgb"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(load_tensor(&out).unwrap().dims, vec![3, 16, 16]);
}

#[test]
fn preprocess_missing_input_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.f32t");
    let missing = dir.path().join("missing.pgm");
    assert_eq!(
        bihpf(&["preprocess", "--in", p(&missing), "--out", p(&out)]),
        EXIT_DATA
    );
    assert!(!out.exists());
}

#[test]
fn eval_without_test_domains_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval.csv");
    let args = with_tiny(&["eval"], &["--set", "test=", "--out", p(&out)]);
    assert_eq!(bihpf(&args), EXIT_DATA);
    assert!(!out.exists());
}

#[test]
fn unknown_config_key_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval.csv");
    let args = with_tiny(&["eval"], &["--set", "nonsense=1", "--out", p(&out)]);
    assert_eq!(bihpf(&args), EXIT_DATA);
}

#[test]
fn synth_gen_then_eval_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let args = with_tiny(&["synth-gen"], &["--set", "test=disks,rings", "--out", p(&data)]);
    assert_eq!(bihpf(&args), EXIT_OK);
    let exp = read_experiment(&data).unwrap();
    assert_eq!(exp.train.len(), 12);
    assert_eq!(exp.test.len(), 2);

    let csv = dir.path().join("eval.csv");
    let model = dir.path().join("model.ckpt");
    let args = with_tiny(
        &["eval"],
        &["--data", p(&data), "--save-model", p(&model), "--out", p(&csv)],
    );
    assert_eq!(bihpf(&args), EXIT_OK);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("domain,acc,ap"));
    let domains: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert!(domains.contains(&"disks") && domains.contains(&"rings"));

    // Re-evaluating the saved checkpoint reproduces the CSV.
    let again = dir.path().join("again.csv");
    let args = with_tiny(
        &["eval"],
        &["--data", p(&data), "--model", p(&model), "--out", p(&again)],
    );
    assert_eq!(bihpf(&args), EXIT_OK);
    assert_eq!(fs::read_to_string(&again).unwrap(), text);
}

#[test]
fn sweep_hpf_and_lpf_csvs_are_comparable() {
    let dir = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for kind in ["cutoff-hpf", "cutoff-lpf"] {
        let out = dir.path().join(format!("{kind}.csv"));
        let args = with_tiny(
            &["sweep"],
            &["--set", "test=disks", "--kind", kind, "--values", "2,4", "--out", p(&out)],
        );
        assert_eq!(bihpf(&args), EXIT_OK, "{kind}");
        let text = fs::read_to_string(&out).unwrap();
        let keys: Vec<String> = text
            .lines()
            .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
            .collect();
        tables.push(keys);
    }
    assert_eq!(tables[0][0], "param,domain");
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn sweep_rejects_unknown_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let args = with_tiny(&["sweep"], &["--kind", "nope", "--out", p(&out)]);
    assert_eq!(bihpf(&args), EXIT_DATA);
}

#[test]
fn train_writes_checkpoint_and_losses() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("m.ckpt");
    let losses = dir.path().join("losses.csv");
    let args = with_tiny(
        &["train"],
        &["--set", "test=disks", "--out", p(&ckpt), "--losses", p(&losses)],
    );
    assert_eq!(bihpf(&args), EXIT_OK);
    let model = bihpf_core::io::load_classifier(&ckpt).unwrap();
    assert_eq!(model.input_spec().channels, 1);
    let text = fs::read_to_string(&losses).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn acm_train_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("acm");
    let args = with_tiny(&["acm-train"], &["--set", "test=disks", "--out", p(&run_dir)]);
    assert_eq!(bihpf(&args), EXIT_OK);
    for f in ["classifier.ckpt", "map.f32t", "history.csv"] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
    let analysis = dir.path().join("analysis");
    let (ckpt, map) = (run_dir.join("classifier.ckpt"), run_dir.join("map.f32t"));
    let args = with_tiny(
        &["acm-analyze"],
        &[
            "--set",
            "test=disks,blobs",
            "--model",
            p(&ckpt),
            "--map",
            p(&map),
            "--out",
            p(&analysis),
        ],
    );
    assert_eq!(bihpf(&args), EXIT_OK);
    let csv = fs::read_to_string(analysis.join("compare.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("domain,acc_original,acc_compressed"));
    assert_eq!(csv.lines().count(), 3);
    assert!(analysis.join("wc.pgm").exists() && analysis.join("artifact.pgm").exists());
}
