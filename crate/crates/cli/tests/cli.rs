//! End-to-end runs of the `entconf` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn entconf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entconf")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--out-dir", s(dir), "--n-utterances", "40", "--seed", "3"];
    args.extend_from_slice(extra);
    let out = entconf(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn eval(data: &Path, posteriors: &str, out_dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "eval",
        "--posteriors",
        s(&data.join(posteriors)).to_owned().leak(),
        "--refs",
        s(&data.join("refs.tsv")).to_owned().leak(),
        "--vocab",
        s(&data.join("vocab.json")).to_owned().leak(),
        "--out-dir",
        s(out_dir),
    ];
    args.extend_from_slice(extra);
    entconf(&args)
}

fn report(out_dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn synth_then_eval_writes_a_full_bundle() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &[]);
    let out_dir = tmp.path().join("out");
    let out = eval(&data, "posteriors.ndjson", &out_dir, &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let r = report(&out_dir);
    let configs = r["configurations"].as_array().unwrap();
    assert_eq!(configs.len(), 45);
    assert!(r["alignment"]["wer"].as_f64().unwrap() > 0.0);
    assert!(r["alignment"]["duration_seconds"].as_f64().unwrap() > 0.0);
    for c in configs {
        let label = c["label"].as_str().unwrap();
        assert!(out_dir.join("words").join(format!("{label}.csv")).is_file());
        assert!(out_dir.join("histograms").join(format!("{label}.csv")).is_file());
        let auc = c["auc_roc"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&auc));
    }
    let summary = fs::read_to_string(out_dir.join("summary.tsv")).unwrap();
    assert_eq!(summary.lines().count(), 46);
    assert!(String::from_utf8_lossy(&out.stdout).contains("tsallis_exp_a0.3333_min"));
}

#[test]
fn binary_and_ndjson_give_the_same_metrics() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, &[]);
    synth(&b, &["--format", "binary"]);
    let narrow = ["--measure", "tsallis", "--norm", "exp", "--alpha", "0.5", "--agg", "min"];
    assert_eq!(code(&eval(&a, "posteriors.ndjson", &tmp.path().join("ra"), &narrow)), 0);
    assert_eq!(code(&eval(&b, "posteriors.bin", &tmp.path().join("rb"), &narrow)), 0);
    let (ra, rb) = (report(&tmp.path().join("ra")), report(&tmp.path().join("rb")));
    // Binary stores f32, so scores and durations differ slightly; counts must not.
    for key in ["matches", "substitutions", "insertions", "deletions"] {
        assert_eq!(ra["alignment"][key], rb["alignment"][key]);
    }
    let (ca, cb) = (&ra["configurations"][0], &rb["configurations"][0]);
    assert_eq!(ca["n_incorrect"], cb["n_incorrect"]);
    let diff = (ca["auc_roc"].as_f64().unwrap() - cb["auc_roc"].as_f64().unwrap()).abs();
    assert!(diff < 1e-3, "{diff}");
}

#[test]
fn malformed_posteriors_exit_2_with_line() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &[]);
    let p = data.join("posteriors.ndjson");
    let mut text = fs::read_to_string(&p).unwrap();
    text.push_str("{\"id\": \"broken\", \"steps\": [[0.5, 0.5]]}\n");
    fs::write(&p, text).unwrap();
    let out = eval(&data, "posteriors.ndjson", &tmp.path().join("out"), &[]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":41:"), "{err}");
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "cases = 3\nbogus = 1\n").unwrap();
    let out = entconf(&["oracle-check", "--config", s(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn pure_noise_eval_exits_3() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &["--pure-noise"]);
    let out_dir = tmp.path().join("out");
    let out = eval(&data, "posteriors.ndjson", &out_dir, &["--measure", "max_prob", "--agg", "min"]);
    assert_eq!(code(&out), 3);
    let r = report(&out_dir);
    assert_eq!(r["alignment"]["matches"], 0);
    assert!(r["alignment"]["wis"].as_f64().unwrap() > 0.0);
    assert!(!r["warnings"]["undefined_metrics"].as_array().unwrap().is_empty());
}

#[test]
fn command_line_overrides_config_file() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &[]);
    let cfg = tmp.path().join("eval.toml");
    fs::write(&cfg, "measure = \"gibbs\"\nnorm = [\"lin\"]\nagg = \"mean\"\nhist_bins = 5\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = eval(&data, "posteriors.ndjson", &out_dir, &["--config", s(&cfg), "--agg", "prod"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out_dir);
    let labels: Vec<&str> = r["config"]["configurations"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(labels, ["gibbs_lin_prod", "tsallis_exp_a0.3333_min"]);
    assert_eq!(r["config"]["hist_bins"], 5);
}

#[test]
fn oracle_check_passes() {
    let out = entconf(&["oracle-check", "--cases", "10", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

#[test]
fn missing_required_flag_exits_2() {
    let out = entconf(&["eval"]);
    assert_eq!(code(&out), 2);
}
