use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn lve(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lve"));
    cmd.args(args).env_remove("LVE_OUTPUT_DIR");
    if let Some(dir) = out {
        cmd.env("LVE_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn z_identity_agrees_and_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = lve(&["z-identity", "--p", "2", "--N", "2", "--lambda-modulus", "0.1", "--lambda-arg", "0", "--beta", "2", "--quad-nodes", "64"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!(v["values"]["relative_gap"].as_f64().unwrap() <= 1e-4);
    assert_eq!(v["schema_version"], 1);
    assert!(v["convention_ledger"]["covariance"].is_string());
    assert_eq!(v["inputs"]["ensemble"]["N"], 2);
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("z-identity.json")).unwrap()).unwrap();
    assert_eq!(on_disk, v);
}

#[test]
fn configuration_errors_exit_two() {
    let o = lve(&["z-identity", "--lambda-arg", "3.1", "--epsilon", "0.2"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pacman"));
    let o = lve(&["pacman-scan", "--N-list", "0..2"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = lve(&["lve-sum", "--n-max", "5"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pacman_scan_csv_has_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let o = lve(&["pacman-scan", "--p", "2", "--N-list", "1..3", "--lambda-modulus", "0.05", "--lambda-arg", "2.0,-1.0"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("pacman-scan.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..6], ["p", "modulus", "arg", "N", "F_re", "F_im"]);
    assert_eq!(r.records().count(), 6);
    assert_eq!(json(&o)["values"]["bounded"], true);
}

#[test]
fn complex_rows_stop_at_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = lve(&["pacman-scan", "--N-list", "2,4", "--lambda-arg", "1.0"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0));
    let rows = csv::Reader::from_path(dir.path().join("pacman-scan.csv")).unwrap().records().count();
    assert_eq!(rows, 1);
}

#[test]
fn values_are_reproducible() {
    let args = ["free-energy", "--p", "3", "--N", "4", "--lambda-modulus", "0.05", "--method", "monte-carlo", "--mc-samples", "2000", "--seed", "11"];
    let (a, b) = (json(&lve(&args, None)), json(&lve(&args, None)));
    assert_eq!(a["values"].to_string(), b["values"].to_string());
}

#[test]
fn fc_eval_reports_residual() {
    let o = lve(&["fc-eval", "--p", "2", "--z-re", "-0.1"], None);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let t = v["values"]["t"]["re"].as_f64().unwrap();
    assert!((t - (1.0 - 1.4f64.sqrt()) / -0.2).abs() < 1e-12);
}

#[test]
fn jacobian_check_random_pairs() {
    let o = lve(&["jacobian-check", "--p", "4", "--lambda-modulus", "7.5", "--pairs", "500"], None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["values"]["non_positive_factors"], 0);
}

#[test]
fn maps_check_asserts_inverse_only_for_quadratic_case() {
    let o = lve(&["maps-check", "--p", "2", "--lambda-modulus", "0.1", "--lambda-arg", "1.5"], None);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
    let o = lve(&["maps-check", "--p", "3"], None);
    assert_eq!(json(&o)["values"]["inverse_asserted"], false);
}

#[test]
fn single_criterion_acceptance_run() {
    let o = lve(&["acceptance", "--criterion", "11"], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[PASS] criterion 11"));
}
