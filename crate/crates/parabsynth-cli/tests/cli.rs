use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const MODULUS_H20: &str = r#"{
    "mu": [0.0, 0.0],
    "phi0": {"center": "0", "coeffs": [[0.0, 0.0], [0.05, 0.0]], "radius": 1e300},
    "phi_inf": {"center": "inf", "coeffs": [[0.0, 0.0]], "radius": 1e300}
  }"#;

fn h20() -> String {
    format!(r#"{{"modulus": {MODULUS_H20}}}"#)
}

const TRIVIAL: &str = r#"{
  "modulus": {
    "mu": [0.5, 0.0],
    "phi0": {"center": "0", "coeffs": [[0.0, 0.0]], "radius": 1e300},
    "phi_inf": {"center": "inf", "coeffs": [[0.0, 0.0]], "radius": 1e300}
  },
  "lambda": 0.01
}"#;

fn run(dir: &TempDir, args: &[&str], config: Option<&str>) -> Output {
    run_env(dir, args, config, None)
}

fn run_env(dir: &TempDir, args: &[&str], config: Option<&str>, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_parabsynth"));
    cmd.args(args).arg("--out").arg(dir.path());
    if let Some(c) = config {
        let p = dir.path().join("config.json");
        fs::write(&p, c).unwrap();
        cmd.arg("--config").arg(p);
    }
    match threads {
        Some(t) => cmd.env("PARABSYNTH_THREADS", t),
        None => cmd.env_remove("PARABSYNTH_THREADS"),
    };
    cmd.output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn synth_trivial_modulus_reports_zero_norm() {
    let d = TempDir::new().unwrap();
    let o = run(&d, &["synth"], Some(TRIVIAL));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&d.path().join("synth.json"));
    assert_eq!(v["diagnostics"]["sampled_f_norm"].as_f64().unwrap(), 0.0);
}

#[test]
fn synth_reports_horn_residual() {
    let d = TempDir::new().unwrap();
    let o = run(&d, &["synth"], Some(&h20()));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&d.path().join("synth.json"));
    assert!(v["horn_maps"]["max_relative_error"].as_f64().unwrap() < 1e-5);
    assert!(!v["horn_maps"]["samples"].as_array().unwrap().is_empty());
}

#[test]
fn synth_refuses_large_lambda_without_force() {
    let cfg = h20().replacen("\"modulus\"", "\"lambda\": 4.0, \"modulus\"", 1);
    let d = TempDir::new().unwrap();
    let o = run(&d, &["synth"], Some(&cfg));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));
    assert!(!d.path().join("synth.json").exists());
    let o = run(&d, &["synth", "--force"], Some(&cfg));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json(&d.path().join("synth.json"))["diagnostics"]["above_bound"].as_bool().unwrap());
}

#[test]
fn synth_taylor_coefficients() {
    let cfg = TRIVIAL.replacen("\"lambda\": 0.01", "\"lambda\": 0.01, \"taylor\": {\"order\": 6, \"radius\": 0.1}", 1);
    let d = TempDir::new().unwrap();
    let o = run(&d, &["synth"], Some(&cfg));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c = &json(&d.path().join("synth.json"))["taylor"]["coeffs"];
    assert!((c[1][0].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((c[2][0].as_f64().unwrap() - 0.01).abs() < 1e-8);
}

#[test]
fn corrupted_and_unknown_configs_exit_2() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run(&d, &["synth"], Some("{\"modulus\": "))), 2);
    let extra = h20().replacen("\"modulus\"", "\"bogus\": 1, \"modulus\"", 1);
    assert_eq!(code(&run(&d, &["synth"], Some(&extra))), 2);
    assert_eq!(code(&run(&d, &["synth"], None)), 2);
    assert_eq!(code(&run(&d, &["verify"], Some("[1, 2"))), 2);
    assert_eq!(code(&run(&d, &["verify", "--suite", "nope"], None)), 2);
}

#[test]
fn portrait_mu_zero_counts() {
    let d = TempDir::new().unwrap();
    let o = run(&d, &["portrait"], Some(r#"{"field": "x0", "lambda": 0.5, "mu": [0, 0], "grid": 5}"#));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&d.path().join("portrait.json"));
    assert_eq!(v["counts"]["poles"], 2);
    assert_eq!(v["counts"]["zeros_with_multiplicity"], 2);
    let csv = fs::read_to_string(d.path().join("portrait.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "traj_id,t,re,im");
    let svg = fs::read_to_string(d.path().join("portrait.svg")).unwrap();
    assert!(svg.contains("viewBox"));
}

#[test]
fn portrait_generic_counts_and_determinism() {
    let cfg = r#"{"field": "x0", "lambda": 0.5, "mu": [0.5, 0], "grid": 5}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(code(&run(&a, &["portrait"], Some(cfg))), 0);
    assert_eq!(code(&run_env(&b, &["portrait"], Some(cfg), Some("1"))), 0);
    let v = json(&a.path().join("portrait.json"));
    assert_eq!(v["counts"]["stationary"], 3);
    assert_eq!(v["counts"]["poles"], 4);
    let sa = fs::read(a.path().join("portrait.svg")).unwrap();
    let sb = fs::read(b.path().join("portrait.svg")).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn portrait_of_synthesized_field() {
    let cfg = format!(r#"{{"field": "xf", "modulus": {MODULUS_H20}, "grid": 3, "options": {{"spinal": false}}}}"#);
    let d = TempDir::new().unwrap();
    let o = run(&d, &["portrait"], Some(&cfg));
    assert_eq!(code(&o), 0, "{}\n{cfg}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&d.path().join("portrait.json"))["field"], "xf");
}

#[test]
fn portrait_x0_needs_lambda() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run(&d, &["portrait"], Some(r#"{"field": "x0"}"#))), 2);
    assert_eq!(code(&run(&d, &["portrait"], Some(r#"{"field": "y"}"#))), 2);
}

#[test]
fn verify_model_suite_passes() {
    let d = TempDir::new().unwrap();
    let o = run(&d, &["verify", "--suite", "model"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&d.path().join("verify.json"));
    assert_eq!(v["passed"], true);
    assert!(v["reports"][0]["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn verify_globalize_suite_passes() {
    let d = TempDir::new().unwrap();
    let o = run(&d, &["verify", "--suite", "globalize"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn verify_failure_exits_4() {
    let d = TempDir::new().unwrap();
    let o = run(&d, &["verify", "--suite", "globalize"], Some(r#"{"lambda": 1000.0}"#));
    assert_eq!(code(&o), 4);
    assert_eq!(json(&d.path().join("verify.json"))["passed"], false);
}

#[test]
fn renorm_zero_data_converges() {
    let d = TempDir::new().unwrap();
    let o = run(&d, &["renorm"], Some(r#"{"phi0": {"center": "0", "coeffs": [[0, 0]], "radius": 1e300}}"#));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&d.path().join("renorm.json"));
    assert_eq!(v["history"]["converged"], true);
    for r in v["history"]["ratios"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() <= 0.1);
    }
}

#[test]
fn renorm_single_step_history() {
    let d = TempDir::new().unwrap();
    let cfg = r#"{"phi0": {"center": "0", "coeffs": [[0, 0], [0.02, 0]], "radius": 1e300}, "options": {"max_iter": 1}}"#;
    let o = run(&d, &["renorm"], Some(cfg));
    assert_eq!(code(&o), 3);
    let v = json(&d.path().join("renorm.json"));
    assert_eq!(v["history"]["differences"].as_array().unwrap().len(), 1);
    assert_eq!(v["history"]["converged"], false);
}

#[test]
fn renorm_missing_phi0_exits_2() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run(&d, &["renorm"], Some(r#"{"mu": [0, 0]}"#))), 2);
}

#[test]
fn thread_override() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run_env(&d, &["synth"], Some(TRIVIAL), Some("2"))), 0);
    assert_eq!(code(&run_env(&d, &["synth"], Some(TRIVIAL), Some("zero"))), 2);
}
