use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bevc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bevc"))
        .args(args)
        .env_remove("BEVC_SEED")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = bevc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a dense operator in the exchange format by hand.
fn write_exchange(path: &Path, dims: (usize, usize), entries: &[f64]) {
    let mut s = format!("# bevc operator exchange v1\ndims=[{},{}]\nlayout=\"row-major\"\nentries={}\n", dims.0, dims.1, entries.len());
    for e in entries {
        s.push_str(&format!("({e:.16e}, 0e0)\n"));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn choi_file_round_trip_is_certified() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("choi.txt");
    let out = bevc(&["build", "sigma", "--k", "3", "--alphas", "2,2", "--out", path_str(&file)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dims: 3x3"));
    let report = ok_json(&["certify", "file", path_str(&file)]);
    assert_eq!(report["verdict"], "BOUND_ENTANGLED_CERTIFIED");
    assert_eq!(report["alpha"]["entangled_certified"], true);
    let w = &report["witness"];
    let eps = w["epsilon_used"]["value"].as_f64().unwrap();
    let tr = w["trace_with_state"]["value"].as_f64().unwrap();
    assert!(eps > 0.0 && (tr + eps).abs() < 1e-10);
    assert_eq!(w["positivity"], "positivity: sampled evidence");
}

#[test]
fn bell_state_is_npt() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("bell.txt");
    let mut m = vec![0.0; 16];
    for &(r, c) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
        m[r * 4 + c] = 0.5;
    }
    write_exchange(&file, (2, 2), &m);
    let report = ok_json(&["certify", "file", path_str(&file)]);
    assert_eq!(report["verdict"], "NPT");
    let min = report["min_pt_eigenvalue"]["value"].as_f64().unwrap();
    assert!((min + 0.5).abs() < 1e-12);
}

#[test]
fn projected_rows_are_certified() {
    let report = ok_json(&["certify", "rho", "--a", "0.5", "--c", "0.8", "--n", "12", "--rows", "1,2,3,4"]);
    assert_eq!(report["verdict"], "BOUND_ENTANGLED_CERTIFIED");
    assert_eq!(report["dims"]["a"], 4);
}

#[test]
fn build_rho_reports_pt_residual() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("rho.txt");
    let out = bevc(&["build", "rho", "--a", "0.5", "--c", "0.8", "--n", "12", "--out", path_str(&file)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("pt_residual:")).unwrap();
    let value: f64 = line.split(':').nth(1).unwrap().trim().parse().unwrap();
    assert!(value <= 1e-12);
    assert!(fs::read_to_string(&file).unwrap().contains("entries=20736"));
}

#[test]
fn two_level_sigma_is_inconclusive() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("s2.txt");
    assert!(bevc(&["build", "sigma", "--k", "2", "--alphas", "0.7", "--out", path_str(&file)]).status.success());
    let report = ok_json(&["certify", "file", path_str(&file)]);
    assert_eq!(report["verdict"], "INCONCLUSIVE");
    assert!(report["witness"].is_null());
}

#[test]
fn build_to_stdout_writes_exchange_format() {
    let out = bevc(&["build", "squeezed", "--lambda", "0.5", "--n", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# bevc operator exchange v1\ndims=[3,3]"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("squeezed"));
}

#[test]
fn exit_codes() {
    let bad = bevc(&["build", "rho", "--a", "0.9", "--c", "0.8", "--n", "4"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("0 < a < c < 1"));
    assert_eq!(bevc(&["build", "sigma", "--k", "4", "--alphas", "2,2"]).status.code(), Some(2));
    assert_eq!(bevc(&["certify", "file", "/nonexistent/state.txt"]).status.code(), Some(4));
    assert_eq!(bevc(&["scan", "alphas", "--grid", ";"]).status.code(), Some(2));
    assert_eq!(bevc(&["--restarts", "0", "certify", "choi"]).status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let neg = dir.path().join("neg.txt");
    write_exchange(&neg, (2, 2), &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0]);
    assert_eq!(bevc(&["certify", "file", path_str(&neg)]).status.code(), Some(2));
    let garbled = dir.path().join("garbled.txt");
    fs::write(&garbled, "not an operator\n").unwrap();
    assert_eq!(bevc(&["certify", "file", path_str(&garbled)]).status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    let a = bevc(&["certify", "choi"]);
    let b = bevc(&["certify", "choi"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let scan1 = bevc(&["scan", "k", "--from", "2", "--to", "5"]);
    let scan2 = bevc(&["scan", "k", "--from", "2", "--to", "5"]);
    assert_eq!(scan1.stdout, scan2.stdout);
}

#[test]
fn seed_comes_from_environment() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_bevc"))
        .args(["certify", "choi", "--no-witness"])
        .env("BEVC_SEED", "0x2A")
        .output()
        .unwrap();
    let report: Value = serde_json::from_slice(&with_env.stdout).unwrap();
    assert_eq!(report["search_config"]["seed"], 42);
    let flag = ok_json(&["certify", "choi", "--no-witness", "--seed", "42"]);
    assert_eq!(flag["search_config"]["seed"], 42);
}

#[test]
fn timings_are_opt_in() {
    assert!(ok_json(&["certify", "choi", "--no-witness"]).get("timings_ms").is_none());
    assert!(ok_json(&["certify", "choi", "--no-witness", "--timings"])["timings_ms"].is_array());
}

#[test]
fn ac_scan_rows_are_ppt() {
    let out = bevc(&["scan", "ac", "--a", "0.3,0.5", "--c", "0.6,0.8", "--n", "10"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let min: f64 = r[col("min_pt_eigenvalue")].parse().unwrap();
        assert!(min >= -1e-10);
        assert_eq!(&r[col("psi_schmidt_rank")], "10");
    }
}

#[test]
fn k_scan_verdicts() {
    let rows: Vec<Value> = serde_json::from_value(ok_json(&["scan", "k", "--from", "2", "--to", "8", "--format", "json"])).unwrap();
    assert_eq!(rows.len(), 7);
    for r in rows {
        let k = r["k"].as_u64().unwrap();
        let want = if k >= 3 { "BOUND_ENTANGLED_CERTIFIED" } else { "INCONCLUSIVE" };
        assert_eq!(r["verdict"], want, "K = {k}");
        assert_eq!(r["psi_schmidt_rank"].as_u64(), Some(k));
    }
}

#[test]
fn single_point_scan() {
    let out = bevc(&["scan", "alphas", "--grid", "2,2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn optics_defaults_match() {
    let r = ok_json(&["optics-verify"]);
    assert!(r["frobenius_distance"]["value"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["within_tolerance"], true);
    for row in r["kerr"].as_array().unwrap() {
        let err = row["sup_error"].as_f64().unwrap();
        if row["alias_free"] == true {
            assert!(err < 1e-12);
        }
        if row["levels"] == 4 && row["k"] == 1 {
            assert!(err > 0.5);
        }
    }
}

#[test]
fn optics_seed_only() {
    let r = ok_json(&["optics-verify", "--k-max", "0"]);
    assert_eq!(r["per_k_identity_residuals"].as_array().unwrap().len(), 0);
    assert!(r["frobenius_distance"]["value"].as_f64().unwrap() <= 1e-10);
    assert_eq!(bevc(&["optics-verify", "--n", "6", "--k-max", "5"]).status.code(), Some(2));
}
