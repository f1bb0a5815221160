use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sharpineq"));
    c.env_remove("SHARPINEQ_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn scratch_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("sharpineq-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn case1_equality_configuration() {
    let out = run(&["verify", "--ineq", "CASE1", "--n", "2", "--a", "3", "--p", "2", "--equality-case"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], "1.0.0");
    assert_eq!(v["payload"]["verdict"], "equality");
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn perturbed_bbl2_dyn_holds() {
    let out = run(&["verify", "--ineq", "BBL2-DYN", "--n", "1", "--a", "2", "--seed", "7", "--h", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["payload"]["verdict"], "holds");
    assert!(v["payload"]["gap"].as_f64().unwrap() > 0.0);
    assert_eq!(v["config"]["seed"], 7);
}

#[test]
fn sobolev_outside_range_is_inadmissible() {
    let out = run(&["verify", "--ineq", "SOBOLEV", "--n", "3", "--p", "4"]);
    assert_eq!(out.status.code(), Some(65));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["verify", "--ineq", "CASE1", "--bogus"]).status.code(), Some(64));
    assert_eq!(run(&["verify", "--ineq", "NOPE"]).status.code(), Some(64));
    assert_eq!(run(&["verify", "--ineq", "CASE1", "--format", "csv"]).status.code(), Some(64));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_payload_is_reproducible() {
    let args = ["verify", "--ineq", "GN-MINUS", "--seed", "3", "--eps", "0.2"];
    let (a, b) = (json(&run(&args)), json(&run(&args)));
    assert_eq!(a["payload"], b["payload"]);
    assert_eq!(a["config"], b["config"]);
}

#[test]
fn sweep_writes_csv_in_parameter_order() {
    let args = ["sweep", "--vary", "a", "--from", "4", "--to", "6", "--steps", "5", "--n", "4", "--p", "2"];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "param");
    let a_col = header.iter().position(|h| *h == "a").unwrap();
    let bound_col = header.iter().position(|h| *h == "p_bound").unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 5);
    let a: Vec<f64> = rows.iter().map(|r| r[a_col].parse().unwrap()).collect();
    assert!(a.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(rows[0][bound_col].parse::<f64>().unwrap(), 4.0);
    assert_eq!(rows[4][bound_col], "inf");
    assert_eq!(run(&args).stdout, out.stdout);
}

#[test]
fn every_number_has_an_error_companion() {
    let v = json(&run(&["verify", "--ineq", "CASE1", "--seed", "2"]));
    let p = &v["payload"];
    for key in ["lhs_error", "rhs_error", "budget"] {
        assert!(p[key].as_f64().unwrap() >= 0.0, "{key}");
    }
    for term in p["terms"].as_array().unwrap() {
        assert!(term["error"].as_f64().unwrap() >= 0.0);
        assert!(term["truncation"].as_f64().unwrap() >= 0.0);
    }
    let c = json(&run(&["constant", "--kind", "gn-trace", "--n", "3", "--p", "2", "--a", "4"]));
    assert!(c["payload"]["error"].as_f64().unwrap() >= 0.0);
    assert!(c["payload"]["theta_residual"].as_f64().unwrap() <= 1e-14);
    let r = json(&run(&["region", "--n", "3", "--samples", "4"]));
    for point in r["payload"]["boundary"].as_array().unwrap() {
        assert!(point["error"].is_number());
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = scratch_dir("env");
    let out = bin()
        .args(["constant", "--kind", "sobolev", "--n", "3", "--p", "2"])
        .env("SHARPINEQ_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let files: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1, "{files:?}");
    assert_eq!(files[0].extension().unwrap(), "json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(v["config"]["command"], "constant");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn explicit_output_path() {
    let dir = scratch_dir("out");
    let path = dir.join("region.json");
    let out = run(&["region", "--n", "2", "--samples", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["payload"]["n"], 2);
    std::fs::remove_dir_all(&dir).unwrap();
}
