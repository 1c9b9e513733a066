use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn jobs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../jobs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dde-floquet")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn job(name: &str) -> String {
    jobs().join(name).display().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn all_methods_agree_on_the_parametric_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum", "--config", &job("parametric.toml")], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&dir.path().join("spectrum.json"));
    let max = doc["max_delta"].as_f64().unwrap();
    assert!(max < 1e-4, "{max}");
    let methods = doc["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 3);
    let counts: Vec<usize> = methods.iter().map(|m| m["records"].as_array().unwrap().len()).collect();
    assert!(counts.iter().all(|&c| c == counts[0] && c > 0), "{counts:?}");
    for f in ["spectrum.csv", "lambda_scatter.csv", "diff.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn records_carry_multipliers_and_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum", "--config", &job("parametric.toml"), "--method", "cf"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&dir.path().join("spectrum.json"));
    let r = &doc["methods"][0]["records"][0];
    let (re, im) = (r["lambda_re"].as_f64().unwrap(), r["lambda_im"].as_f64().unwrap());
    let rho = (2.0 * std::f64::consts::PI * re).exp();
    assert!((r["multiplier_re"].as_f64().unwrap().hypot(r["multiplier_im"].as_f64().unwrap()) - rho).abs() < 1e-14);
    assert!(im > -0.5 && im <= 0.5);
    assert_eq!(r["n_win"], 8);
    assert_eq!(r["converged"], true);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run(&["spectrum", "--config", &job("parametric.toml"), "--method", "risken"], d.path());
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["spectrum.json", "spectrum.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn constant_coefficient_job_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--config", &job("delay_oscillator.toml")], dir.path());
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("PASS monodromy agreement") && !text.contains("FAIL"), "{text}");
}

#[test]
fn empty_box_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum", "--config", &job("parametric.toml"), "--method", "cf", "--box", "0.5", "1.0", "-0.5", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no roots in box"));
    let doc = read_json(&dir.path().join("spectrum.json"));
    assert!(doc["methods"][0]["records"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_problem_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "format = \"dde-system/1\"\ndim = 1\ntau = \"one\"\n").unwrap();
    fs::write(dir.path().join("job.toml"), "problem = \"bad.toml\"\n").unwrap();
    let o = run(&["spectrum", "--config", &dir.path().join("job.toml").display().to_string()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:3:"), "{err}");
}

#[test]
fn invalid_overrides_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum", "--config", &job("parametric.toml"), "--box", "1.0", "-1.0", "-0.5", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["orbit", "--config", &job("parametric.toml")], dir.path());
    assert_eq!(o.status.code(), Some(2), "orbit of a density");
}

#[test]
fn orbit_residual_slope_matches_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["orbit", "--config", &job("van_der_pol.toml"), "--order", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&dir.path().join("orbit.json"));
    let slope = doc["residual_slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() < 0.5, "{slope}");
    assert_eq!(doc["frequencies"].as_array().unwrap().len(), 2);
    let trace = fs::read_to_string(dir.path().join("orbit_trace.csv")).unwrap();
    assert!(trace.starts_with("xi,q0,q1\n"));
}

#[test]
fn adjoint_gram_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["adjoint", "--config", &job("parametric.toml")], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let g = read_json(&dir.path().join("gram.json"));
    assert!(g["max_off_diagonal"].as_f64().unwrap() < 1e-8);
    assert!(g["max_diagonal_defect"].as_f64().unwrap() < 1e-8);
    assert_eq!(g["phases"].as_array().unwrap().len(), 8);
}
