use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn write(dir: &Path, name: &str, kind: &str, payload: Value) -> std::path::PathBuf {
    let path = dir.join(name);
    let doc = json!({ "schema_version": 1, "kind": kind, "payload": payload });
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path
}

fn blkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blkit")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad report ({e}): {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn mat(rows: usize, cols: usize, data: &[f64]) -> Value {
    json!({ "rows": rows, "cols": cols, "data": data })
}

#[test]
fn wyner_report() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "wyner.json", "wyner", json!({ "sigma": mat(2, 2, &[1.0, 0.5, 0.5, 1.0]) }));
    let out = blkit(&["solve", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let v = r["values"]["common_information"].as_f64().unwrap();
    assert!((v - 0.5 * 3f64.ln()).abs() < 1e-6);
    assert_eq!(r["units"], "nats");
    assert_eq!(r["seed"], 0);

    let bits = report(&blkit(&["solve", f.to_str().unwrap(), "--bits"]));
    let vb = bits["values"]["common_information"].as_f64().unwrap();
    assert!((vb - v / 2f64.ln()).abs() < 1e-9);
}

#[test]
fn gaussian_hc_identity_is_member() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "hc.json",
        "hc_gaussian",
        json!({ "sigma": mat(2, 2, &[1.0, 0.0, 0.0, 1.0]), "p": [1.0, 1.0] }),
    );
    let r = report(&blkit(&["member", f.to_str().unwrap()]));
    assert_eq!(r["witness"]["member"], true);
    assert!(r["margins"]["min_eigenvalue"].as_f64().unwrap().abs() < 1e-12);
}

fn bsc_problem(eps: f64, c: f64) -> Value {
    json!({
        "nu": [0.5, 0.5],
        "channels": [{ "kernel": mat(2, 2, &[1.0 - eps, eps, eps, 1.0 - eps]), "c": c }],
    })
}

#[test]
fn tensorization_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = bsc_problem(0.1, 1.5);
    p["check"] = json!({ "suite": "tensorization" });
    let f = write(dir.path(), "tensorization.json", "forward_bl", p);
    let out = blkit(&["check", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["passed"], true);
    assert_eq!(r["certified"], true);
}

#[test]
fn reports_are_deterministic_and_carry_digest() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bl.json", "forward_bl", bsc_problem(0.1, 2.0));
    let a = blkit(&["solve", f.to_str().unwrap(), "--seed", "7"]);
    let b = blkit(&["solve", f.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    assert_eq!(r["seed"], 7);
    let digest = r["input_sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(r["values"]["best_constant"].as_f64().unwrap() > 0.0);
}

#[test]
fn forward_duality_and_oracle_agree() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bl.json", "forward_bl", bsc_problem(0.2, 1.8));
    let v = report(&blkit(&["verify", f.to_str().unwrap()]));
    assert_eq!(v["passed"], true);
    let s = report(&blkit(&["solve", f.to_str().unwrap()]));
    let o = report(&blkit(&["oracle", f.to_str().unwrap()]));
    let a = s["values"]["best_constant"].as_f64().unwrap();
    let b = o["values"]["best_constant"].as_f64().unwrap();
    assert!((a - b).abs() < 5e-3, "{a} vs {b}");
}

#[test]
fn violated_inequality_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // lambda below 1 breaks the Gaussian transportation inequality for a shifted mean.
    let f = write(
        dir.path(),
        "t2.json",
        "t2_gaussian",
        json!({ "mean": [2.0], "cov": mat(1, 1, &[1.0]), "lambda": 0.5 }),
    );
    let out = blkit(&["verify", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["passed"], false);
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_version = dir.path().join("v.json");
    std::fs::write(&bad_version, r#"{"schema_version": 2, "kind": "wyner", "payload": {}}"#).unwrap();
    assert_eq!(blkit(&["solve", bad_version.to_str().unwrap()]).status.code(), Some(2));

    let bad_dims = write(dir.path(), "d.json", "wyner", json!({ "sigma": mat(2, 2, &[1.0, 0.5, 0.5]) }));
    assert_eq!(blkit(&["solve", bad_dims.to_str().unwrap()]).status.code(), Some(2));

    let extra = write(dir.path(), "e.json", "wyner", json!({ "sigma": mat(1, 1, &[1.0]), "rho": 0.3 }));
    assert_eq!(blkit(&["solve", extra.to_str().unwrap()]).status.code(), Some(2));

    let wrong_cmd = write(dir.path(), "w.json", "wyner", json!({ "sigma": mat(2, 2, &[1.0, 0.5, 0.5, 1.0]) }));
    assert_eq!(blkit(&["member", wrong_cmd.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn strict_flags_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bl.json", "forward_bl", bsc_problem(0.1, 2.0));
    let path = f.to_str().unwrap();
    let loose = blkit(&["solve", path, "--tol", "1e-300"]);
    assert_eq!(report(&loose)["converged"], false);
    assert_eq!(loose.status.code(), Some(0));
    assert_eq!(blkit(&["solve", path, "--tol", "1e-300", "--strict"]).status.code(), Some(3));
}

#[test]
fn keygen_trace_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "kg.json",
        "keygen",
        json!({ "sigma": mat(3, 3, &[1.0, 0.6, 0.5, 0.6, 1.0, 0.3, 0.5, 0.3, 1.0]), "samples": 12 }),
    );
    let csv_path = dir.path().join("trace.csv");
    let out = blkit(&["trace", f.to_str().unwrap(), "--out", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("R_nats,R1_nats,R2_nats,R3_nats"));
    assert_eq!(lines.count(), 12);
    assert_eq!(blkit(&["trace", f.to_str().unwrap()]).status.code(), Some(2));
}
