use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dilute-cw"));
    cmd.env_remove("DILUTE_CW_PRECISION");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let line = text.lines().last().expect("error on stderr");
    serde_json::from_str(line).expect("stderr is JSON")
}

fn csv_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no row {key}"))
        .to_string()
}

fn config_header(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).unwrap();
    let first = text.lines().next().unwrap();
    serde_json::from_str(first.strip_prefix("# config: ").unwrap()).unwrap()
}

#[test]
fn inspect_reports_geometry() {
    let out = run(&["inspect", "--N", "100", "--p", "1", "--beta", "0.5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(csv_value(&text, "log_a"), "0.0");
    assert_eq!(csv_value(&text, "beta_eff"), "0.5");
    let w: f64 = csv_value(&text, "strip_halfwidth").parse().unwrap();
    assert!((w - 0.285398).abs() < 1e-6);
    assert_eq!(csv_value(&text, "regime_warning"), "false");
}

#[test]
fn inspect_rejects_beta_above_one() {
    let out = run(&["inspect", "--N", "100", "--p", "1", "--beta", "1.2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "BetaOutOfRange");
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn inspect_flags_sparse_regime() {
    let out = run(&["inspect", "--N", "1000", "--p", "0.01"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let indicator: f64 = csv_value(&text, "dilution_indicator").parse().unwrap();
    assert!((indicator - 1.0).abs() < 1e-12);
    assert_eq!(csv_value(&text, "regime_warning"), "true");
    let warn = stderr_json(&out);
    assert_eq!(warn["warning"], "DiluteRegime");
}

#[test]
fn cumulants_csv_has_eight_rows_with_margins() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let out = run(&[
        "cumulants",
        "--N",
        "400",
        "--beta",
        "0.5",
        "--p",
        "1",
        "--h0",
        "0.2",
        "--J",
        "8",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: "));
    let header: Vec<&str> = lines[1].split(',').collect();
    let margin = header
        .iter()
        .position(|c| *c == "margin")
        .expect("margin column");
    let rows = &lines[2..];
    assert_eq!(rows.len(), 8);
    for row in &rows[2..] {
        let m: f64 = row.split(',').nth(margin).unwrap().parse().unwrap();
        assert!(m >= 0.0, "negative margin in {row}");
    }
    assert_eq!(config_header(&path)["J"], 8);
}

#[test]
fn contour_outside_strip_is_a_config_error() {
    let out = run(&["cumulants", "--N", "100", "--beta", "0.5", "--R", "0.4"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "ContourExitsStrip");
}

#[test]
fn empty_sweep_schedule_is_a_config_error() {
    let out = run(&["sweep", "--beta", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "ConfigError");
}

#[test]
fn schedule_exponent_is_bounded() {
    let out = run(&[
        "sweep",
        "--beta",
        "0.5",
        "--p-schedule",
        "1,0.7",
        "--N-schedule",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "ConfigError");
}

#[test]
fn sweep_is_sorted_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let args = [
        "sweep",
        "--beta",
        "0.5",
        "--p-schedule",
        "1,0.25",
        "--N-schedule",
        "400,100,200",
        "--out",
        path.to_str().unwrap(),
    ];
    assert!(run(&args).status.success());
    let first = std::fs::read(&path).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(first, std::fs::read(&path).unwrap());

    let text = String::from_utf8(first).unwrap();
    let ns: Vec<usize> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ns.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(ns.first(), Some(&100));
    assert_eq!(ns.last(), Some(&400));
}

#[test]
fn cumulant_output_is_bitwise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let args = [
        "cumulants",
        "--N",
        "300",
        "--beta",
        "0.8",
        "--h0",
        "0.1",
        "--J",
        "10",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ];
    assert!(run(&args).status.success());
    let first = std::fs::read(&path).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(first, std::fs::read(&path).unwrap());
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["data"].as_array().unwrap().len(), 10);
    assert_eq!(v["config"]["beta"], 0.8);
}

#[test]
fn verify_quick_passes() {
    let out = run(&["verify", "--profile", "quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn config_file_and_env_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "N = 20\nbeta = 0.4\nprecision_digits = 30\n").unwrap();
    let out_path = dir.path().join("pmf.csv");
    let out = bin()
        .args(["pmf", "--config", cfg.to_str().unwrap(), "--beta", "0.6"])
        .args(["--out", out_path.to_str().unwrap()])
        .env("DILUTE_CW_PRECISION", "80")
        .output()
        .unwrap();
    assert!(out.status.success());
    let header = config_header(&out_path);
    assert_eq!(header["N"], 20);
    assert_eq!(header["beta"], 0.6);
    assert_eq!(header["precision_digits"], 30);

    std::fs::write(&cfg, "N = 20\nbeta = 0.4\n").unwrap();
    let out = bin()
        .args(["pmf", "--config", cfg.to_str().unwrap()])
        .args(["--out", out_path.to_str().unwrap()])
        .env("DILUTE_CW_PRECISION", "80")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(config_header(&out_path)["precision_digits"], 80);
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 2 + 21);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "N = 20\ntemperature = 3\n").unwrap();
    let out = run(&["inspect", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "ConfigError");
}

#[test]
fn p_and_schedule_are_exclusive() {
    let out = run(&[
        "inspect",
        "--N",
        "100",
        "--p",
        "0.5",
        "--p-schedule",
        "1,0.25",
        "--beta",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
