//! End-to-end checks of the wsim binary: exit codes, file outputs, and
//! run-to-run determinism.

use std::path::Path;
use std::process::{Command, Output};

fn wsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsim"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn assert_code(out: &Output, code: i32, context: &str) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "{context}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn success_exits_zero() {
    let out = wsim(&["transform", "--n", "4"]);
    assert_code(&out, 0, "transform should succeed");
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    // Every row of the transform is a unit vector.
    for line in text.lines() {
        let row: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row.len(), 5);
        let norm: f64 = row.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-14);
    }
}

#[test]
fn validation_failures_exit_two() {
    let out = wsim(&["evolve", "--n", "2"]);
    assert_code(&out, 2, "n below 3 is invalid");
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_atoms"));

    let out = wsim(&["figure", "nonsense"]);
    assert_code(&out, 2, "unknown scenario is invalid");
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("fig2a") && err.contains("feasibility"), "{err}");

    // No generation time exists above the bright-mode resonance.
    let out = wsim(&["evolve", "--delta", "25", "--nu", "10"]);
    assert_code(&out, 2, "η < 0 leaves t_end undefined");
    assert!(String::from_utf8_lossy(&out.stderr).contains("Δ < √N ν"));

    // A step violating the stability bound is rejected up front.
    let out = wsim(&["evolve", "--t-end", "1", "--dt", "0.5"]);
    assert_code(&out, 2, "dt beyond the stability bound is invalid");
}

#[test]
fn integrator_abort_exits_three() {
    // dt sits exactly on the stability bound, so the guard admits it, but
    // over a long run the measured norm drift crosses the abort tolerance.
    let out = wsim(&[
        "evolve", "--n", "4", "--delta", "10", "--nu", "0", "--dt", "0.005", "--t-end", "100",
    ]);
    assert_code(&out, 3, "accumulated norm drift should abort");
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("norm drift") && err.contains("reduce dt"), "{err}");
}

#[test]
fn evolve_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = wsim(&[
            "evolve",
            "--n",
            "4",
            "--t-end",
            "2",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_code(&out, 0, "evolve should succeed");
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b, "reruns must be byte-identical");
    let text = String::from_utf8(bytes_a).unwrap();
    assert!(text.starts_with("t_f,tau,fidelity,pop_atom_1"));
}

#[test]
fn evolve_json_carries_metadata() {
    let out = wsim(&["evolve", "--n", "3", "--t-end", "1", "--format", "json"]);
    assert_code(&out, 0, "json evolve should succeed");
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["metadata"]["model"], "full");
    assert_eq!(doc["metadata"]["params"]["n_atoms"], 3);
    assert!(doc["samples"].as_array().unwrap().len() > 1);
}

#[test]
fn fock_validation_run_matches_sector_run() {
    let sector = wsim(&["evolve", "--n", "3", "--t-end", "1", "--dt", "0.0015"]);
    assert_code(&sector, 0, "sector run");
    let fock = wsim(&[
        "evolve", "--n", "3", "--t-end", "1", "--dt", "0.0015", "--nmax", "1",
    ]);
    assert_code(&fock, 0, "fock run");
    let parse_last = |out: &Output| -> Vec<f64> {
        let text = String::from_utf8_lossy(&out.stdout).into_owned();
        let line = text.lines().last().unwrap().to_string();
        line.split(',').map(|v| v.parse().unwrap()).collect()
    };
    let a = parse_last(&sector);
    let b = parse_last(&fock);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b.iter()) {
        assert!((x - y).abs() < 1e-10, "{x} vs {y}");
    }
}

#[test]
fn analytic_defaults_emit_header_and_rows() {
    let out = wsim(&["analytic", "--n", "5"]);
    assert_code(&out, 0, "analytic should succeed");
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t_f,tau,fidelity,pop_first,pop_other"
    );
    assert_eq!(lines.count(), 1001);
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn sweep_grid_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{"sweep":{"model":"effective","n_atoms":4,
            "axes":[{"name":"delta_over_f","min":6,"max":12,"points":7}],
            "nu_over_f":10}}"#,
    );
    let serial = dir.path().join("serial");
    let parallel = dir.path().join("parallel");
    let out = wsim(&[
        "sweep", "--config", &cfg, "--out", serial.to_str().unwrap(), "--workers", "1",
    ]);
    assert_code(&out, 0, "serial sweep");
    let out = wsim(&[
        "sweep", "--config", &cfg, "--out", parallel.to_str().unwrap(), "--workers", "4",
    ]);
    assert_code(&out, 0, "parallel sweep");
    let a = std::fs::read(serial.join("sweep_grid.csv")).unwrap();
    let b = std::fs::read(parallel.join("sweep_grid.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("delta_over_f,t_gen,fidelity,status"));
    assert_eq!(text.lines().count(), 8);
    assert!(serial.join("sweep_summary.json").exists());
}

#[test]
fn config_document_kinds_are_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let scenario_cfg = write_config(dir.path(), "scenario.json", r#"{"scenario":"custom"}"#);
    let sweep_cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{"sweep":{"axes":[{"name":"nu_over_f","min":8,"max":12,"points":3}]}}"#,
    );
    let out = wsim(&["sweep", "--config", &scenario_cfg]);
    assert_code(&out, 2, "sweep rejects scenario docs");
    assert!(String::from_utf8_lossy(&out.stderr).contains("figure"));

    let out = wsim(&["figure", "custom", "--config", &sweep_cfg]);
    assert_code(&out, 2, "figure rejects sweep docs");

    let mismatched = write_config(dir.path(), "mismatch.json", r#"{"scenario":"fig3"}"#);
    let out = wsim(&["figure", "fig2a", "--config", &mismatched]);
    assert_code(&out, 2, "scenario name mismatch");

    let unknown = write_config(dir.path(), "unknown.json", r#"{"scenario":"fig3","zap":1}"#);
    let out = wsim(&["figure", "fig3", "--config", &unknown]);
    assert_code(&out, 2, "unknown key");
    assert!(String::from_utf8_lossy(&out.stderr).contains("zap"));
}

#[test]
fn figure_scenario_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fig3.json",
        r#"{"scenario":"fig3","delta_over_f":{"min":9,"max":11,"points":3}}"#,
    );
    let out = wsim(&[
        "figure", "fig3", "--config", &cfg, "--out",
        dir.path().join("results").to_str().unwrap(),
    ]);
    assert_code(&out, 0, "fig3 reduced grid");
    let grid = dir.path().join("results/fig3_grid.csv");
    assert!(grid.exists());
    assert!(dir.path().join("results/fig3_summary.json").exists());
    let text = std::fs::read_to_string(grid).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",ok")));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["scenario"], "fig3");
    assert!(summary["sweep"]["peak"]["fidelity"].as_f64().unwrap() > 0.98);
}

#[test]
fn custom_scenario_trajectory_from_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "custom.json",
        r#"{"scenario":"custom","n_atoms":3,"t_end":1.5,"dt":0.001,"format":"json"}"#,
    );
    let out = wsim(&[
        "figure", "custom", "--config", &cfg, "--out", dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0, "custom trajectory");
    let run = dir.path().join("custom_n3.json");
    assert!(run.exists());
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&run).unwrap()).unwrap();
    assert_eq!(doc["metadata"]["t_end"], 1.5);
}
