use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lubrisurf"))
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn invoke(cmd: &str, config: &Path, out: &Path) -> Output {
    bin().args([cmd, "--quiet", "--config"]).arg(config).arg("--out").arg(out).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn short_run(t_end: f64) -> Value {
    json!({ "n_cells": 32, "integrator": { "t_end": t_end, "sample_interval": 0.05 } })
}

/// summary.csv rows as column-name → string maps.
fn summary(dir: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let text = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(str::to_string)).collect())
        .collect()
}

#[test]
fn simulate_writes_artifacts_and_exits_zero() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &short_run(0.5));
    let out = tmp.path().join("run");
    let res = invoke("simulate", &cfg, &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["halt_reason"]["reason"], "completed");
    assert_eq!(manifest["exit_code"], 0);
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,fluid_mass,surfactant_mass,energy"));
    assert_eq!(trace.lines().count(), 1 + 11);
    assert!(out.join("snapshots").read_dir().unwrap().count() >= 2);
}

#[test]
fn invalid_beta_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({ "params": { "beta": 0.0 } }));
    let res = invoke("simulate", &cfg, &tmp.path().join("run"));
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("beta must be > 0"));
}

#[test]
fn missing_config_and_bad_arguments_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(invoke("simulate", &tmp.path().join("nope.json"), tmp.path()).status.code(), Some(1));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn positivity_floor_violation_exits_two() {
    let tmp = TempDir::new().unwrap();
    let mut v = short_run(0.1);
    v["integrator"]["positivity_floor"] = json!(0.9);
    let cfg = write_config(tmp.path(), "c.json", &v);
    let out = tmp.path().join("run");
    assert_eq!(invoke("simulate", &cfg, &out).status.code(), Some(2));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["halt_reason"]["reason"], "positivity_loss");
    assert_eq!(manifest["exit_code"], 2);
    assert!(out.join("trace.csv").exists());
}

#[test]
fn overflowing_state_exits_three() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("h,m,gamma\n");
    for i in 0..8 {
        let h = if i == 3 { 1e120 } else { 1.0 };
        csv.push_str(&format!("{h},0.005,0.005\n"));
    }
    std::fs::write(tmp.path().join("ic.csv"), csv).unwrap();
    let v = json!({
        "n_cells": 8,
        "initial": { "kind": "arrays", "path": tmp.path().join("ic.csv") },
        "integrator": { "t_end": 0.01 }
    });
    let cfg = write_config(tmp.path(), "c.json", &v);
    let out = tmp.path().join("run");
    assert_eq!(invoke("simulate", &cfg, &out).status.code(), Some(3));
    assert_eq!(read_json(&out.join("manifest.json"))["halt_reason"]["reason"], "non_finite");
}

#[test]
fn seed_flag_changes_noisy_runs_and_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let mut v = short_run(0.1);
    v["initial"] = json!({ "kind": "perturbed_equilibrium", "h_star": 1.0, "eta_star": 0.01, "rel_amp_h": 0.01, "noise": 0.01 });
    let cfg = write_config(tmp.path(), "c.json", &v);
    let run = |seed: &str, name: &str| {
        let out = tmp.path().join(name);
        let st = bin().args(["simulate", "--quiet", "--seed", seed, "--config"]).arg(&cfg).arg("--out").arg(&out).status();
        assert!(st.unwrap().success());
        (std::fs::read(out.join("trace.csv")).unwrap(), read_json(&out.join("manifest.json")))
    };
    let (a, ma) = run("1", "a");
    let (b, _) = run("2", "b");
    let (c, _) = run("1", "c");
    assert_ne!(a, b);
    assert_eq!(a, c);
    assert_eq!(ma["seed"], 1);
}

#[test]
fn manifest_round_trip_reproduces_trace() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &short_run(0.3));
    let first = tmp.path().join("first");
    assert!(invoke("simulate", &cfg, &first).status.success());
    let second = tmp.path().join("second");
    assert!(invoke("simulate", &first.join("manifest.json"), &second).status.success());
    assert_eq!(std::fs::read(first.join("trace.csv")).unwrap(), std::fs::read(second.join("trace.csv")).unwrap());
}

#[test]
fn linstab_defaults_report_stable_spectrum_and_certificates() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({ "n_cells": 32 }));
    let out = tmp.path().join("lin");
    assert_eq!(invoke("linstab", &cfg, &out).status.code(), Some(0));
    let r = read_json(&out.join("linstab.json"));
    assert!(r["spectral_bound"].as_f64().unwrap() < 0.0);
    assert!(r["omega0_num"].as_f64().unwrap() > 0.0);
    assert_eq!(r["eigenvalues"].as_array().unwrap().len(), 3 * 32 - 2);
    let bq = r["bq"].as_array().unwrap();
    assert_eq!(bq.len(), 3);
    assert!(bq.iter().all(|e| e["positive_definite"] == true));
    assert!((r["q_max"].as_f64().unwrap() - 16.0 * 0.1 / 3.0).abs() < 1e-12);
}

#[test]
fn linstab_beyond_q_max_is_indefinite() {
    let tmp = TempDir::new().unwrap();
    let v = json!({
        "n_cells": 16,
        "initial": { "kind": "perturbed_equilibrium", "h_star": 1.0, "eta_star": 0.0 },
        "linstab": { "q_fractions": [1.5] }
    });
    let out = tmp.path().join("lin");
    assert_eq!(invoke("linstab", &write_config(tmp.path(), "c.json", &v), &out).status.code(), Some(0));
    let entry = &read_json(&out.join("linstab.json"))["bq"][0];
    assert_eq!(entry["positive_definite"], false);
    assert!(entry["failing_minor"].as_u64().is_some());
}

#[test]
fn constant_law_has_unbounded_q_max() {
    let tmp = TempDir::new().unwrap();
    let v = json!({ "n_cells": 16, "params": { "sigma_law": { "kind": "constant", "value": 1.0 } } });
    let out = tmp.path().join("lin");
    assert_eq!(invoke("linstab", &write_config(tmp.path(), "c.json", &v), &out).status.code(), Some(0));
    let r = read_json(&out.join("linstab.json"));
    assert!(r["q_max"].is_null());
    assert!(r["q_max_note"].as_str().unwrap().contains("unbounded"));
    assert!(r["bq"].as_array().unwrap().is_empty());
}

#[test]
fn compare_flags_short_tail_and_rejects_mismatch() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({ "n_cells": 32, "integrator": { "t_end": 0.1, "sample_interval": 0.05 } }));
    let (run, lin) = (tmp.path().join("run"), tmp.path().join("lin"));
    assert!(invoke("simulate", &cfg, &run).status.success());
    assert!(invoke("linstab", &cfg, &lin).status.success());
    let res = bin().args(["compare", "--quiet", "--run"]).arg(&run).arg("--linstab").arg(&lin).output().unwrap();
    assert_eq!(res.status.code(), Some(0));
    let c = &read_json(&lin.join("linstab.json"))["decay_comparison"];
    assert_eq!(c["insufficient_tail"], true);
    assert_eq!(c["verdict"], "insufficient_tail");

    let other = write_config(tmp.path(), "o.json", &json!({ "n_cells": 16 }));
    let lin2 = tmp.path().join("lin2");
    assert!(invoke("linstab", &other, &lin2).status.success());
    let res = bin().args(["compare", "--quiet", "--run"]).arg(&run).arg("--linstab").arg(&lin2).output().unwrap();
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn compare_long_run_is_consistent() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({ "n_cells": 32, "integrator": { "t_end": 20.0, "sample_interval": 0.1, "stop_on_steady": false } }));
    let (run, lin) = (tmp.path().join("run"), tmp.path().join("lin"));
    assert!(invoke("simulate", &cfg, &run).status.success());
    assert!(invoke("linstab", &cfg, &lin).status.success());
    assert!(bin().args(["compare", "--quiet", "--run"]).arg(&run).arg("--linstab").arg(&lin).status().unwrap().success());
    let c = &read_json(&lin.join("linstab.json"))["decay_comparison"];
    assert_eq!(c["verdict"], "consistent", "{c}");
}

fn sweep_config(axes: Value, t_end: f64) -> Value {
    json!({
        "base": { "n_cells": 16, "integrator": { "t_end": t_end, "sample_interval": 0.1 } },
        "axes": axes
    })
}

#[test]
fn sweep_reaches_constant_steady_state_everywhere() {
    let tmp = TempDir::new().unwrap();
    let v = sweep_config(json!([{ "name": "K", "values": [0.5, 2.0] }, { "name": "beta", "values": [0.5, 2.0] }]), 60.0);
    let out = tmp.path().join("sweep");
    assert_eq!(invoke("sweep", &write_config(tmp.path(), "s.json", &v), &out).status.code(), Some(0));
    let rows = summary(&out);
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row["run_id"], i.to_string());
        assert_eq!(row["steady_verdict"], "steady_constant", "{row:?}");
        assert!(row["max_mass_drift"].parse::<f64>().unwrap() < 1e-12);
        assert!(out.join(format!("run_{i:04}/manifest.json")).exists());
    }
    // First axis varies slowest.
    let ks: Vec<f64> = rows.iter().map(|r| r["K"].parse().unwrap()).collect();
    assert_eq!(ks, vec![0.5, 0.5, 2.0, 2.0]);
}

#[test]
fn sweep_records_positivity_loss_without_failing() {
    let tmp = TempDir::new().unwrap();
    let v = sweep_config(json!([{ "name": "amp_h", "values": [0.01, 1.5] }]), 0.2);
    let out = tmp.path().join("sweep");
    assert_eq!(invoke("sweep", &write_config(tmp.path(), "s.json", &v), &out).status.code(), Some(0));
    let rows = summary(&out);
    assert_eq!(rows[0]["halt_reason"], "completed");
    assert_eq!(rows[1]["halt_reason"], "positivity_loss");
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let mut v = sweep_config(json!([{ "name": "noise", "values": [0.0, 0.01] }, { "name": "D", "values": [0.1, 0.3] }]), 0.5);
    v["base"]["initial"] = json!({ "kind": "perturbed_equilibrium", "h_star": 1.0, "eta_star": 0.01, "rel_amp_h": 0.01, "noise": 0.01 });
    let cfg = write_config(tmp.path(), "s.json", &v);
    let run = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let st = bin()
            .env("LUBRISURF_THREADS", threads)
            .args(["sweep", "--quiet", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        std::fs::read(out.join("summary.csv")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "4"));
    assert_eq!(a, run("c", "1"));
}
