use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tepdyn"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const OSCILLATOR: &str = r#"{
  "system": "rayleigh_oscillator",
  "parameters": { "m": 1.0, "k": 4.0, "eta": 0.2 },
  "initial": { "x": [1.0], "v": [0.0] },
  "t_end": 2.0,
  "integrator": { "method": "rk4", "dt": 1e-3, "stride": 50 }
}"#;

const BAR: &str = r#"{
  "system": "bar",
  "parameters": { "nodes": 101, "length": 1.0, "rho0": 1000.0, "beta": 5.0, "alpha": 10.0, "m": 2.0 },
  "density_law": "exponential",
  "initial": { "sine": { "mode": 1, "u_amplitude": 0.0, "w_amplitude": 0.02 } },
  "t_end": 0.1,
  "integrator": { "dt": 2.5e-3, "stride": 4 }
}"#;

#[test]
fn disk_simulation_writes_labelled_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "disk.json",
        r#"{
  "system": "disk_damper",
  "parameters": { "m": 1.0, "r": 1.0, "eta": 0.7, "g": 9.81 },
  "initial": { "x": [0.0], "v": [0.0] },
  "t_end": 0.5,
  "integrator": { "method": "rk4", "dt": 1e-3, "stride": 10 }
}"#,
    );
    let out = dir.path().join("out");
    let o = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,phi,phidot,phiddot,E,Qpow,balance_defect");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 51);
    assert!(rows.iter().all(|r| r.split(',').count() == 7));
    let d = json(&out.join("diagnostics.json"));
    assert!(d["energy"]["balance_residual"].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn singular_disk_run_exits_with_runtime_code_and_keeps_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "disk.json",
        r#"{
  "system": "disk_damper",
  "parameters": { "m": 1.0, "r": 1.0, "eta": 0.7, "g": 9.81 },
  "initial": { "x": [0.0], "v": [0.0] },
  "t_end": 10.0,
  "integrator": { "method": "rk4", "dt": 1e-3, "stride": 10 }
}"#,
    );
    let out = dir.path().join("out");
    let o = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(3));
    assert!(out.join("trajectory.csv").exists());
    assert!(out.join("diagnostics.json").exists());
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(err["error"]["exit_code"], 3);
}

#[test]
fn bar_simulation_writes_fields_and_series() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bar.json", BAR);
    let out = dir.path().join("out");
    let o = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 2 * 101);
    assert_eq!(header[1], "u_0");
    assert_eq!(header[102], "w_0");
    let d = json(&out.join("diagnostics.json"));
    let series = &d["series"];
    let n = series["t"].as_array().unwrap().len();
    assert_eq!(csv.lines().count(), n + 1);
    for key in ["kinetic", "dissipation", "mass", "mass_rate"] {
        assert_eq!(series[key].as_array().unwrap().len(), n, "{key}");
    }
}

#[test]
fn malformed_config_is_rejected_without_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{ "system": "rayleigh_oscillator", "parameters": {"m": 1.0}, "speed": 3 }"#);
    let out = dir.path().join("out");
    let o = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("trajectory.csv").exists());
    assert!(!out.join("diagnostics.json").exists());
}

#[test]
fn unreadable_config_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = run(bin().args(["simulate", "--config"]).arg(dir.path().join("nope.json")).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_suite_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("verify.json");
    let o = run(bin().args(["verify", "--suite", "no-such-suite", "--report"]).arg(&report));
    assert_eq!(o.status.code(), Some(2));
    assert!(!report.exists());
}

#[test]
fn single_suite_report_records_seed() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("verify.json");
    let o = run(bin().args(["verify", "--suite", "power-identity", "--seed", "17", "--report"]).arg(&report));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&report);
    assert_eq!(r["seed"], 17);
    assert_eq!(r["passed"], true);
    let suites = r["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 1);
    assert_eq!(suites[0]["id"], "power-identity");
}

#[test]
fn verify_is_reproducible_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = run(bin().args(["verify", "--suite", "eq3-equivalence", "--suite", "ad-vs-fd", "--report"]).arg(p));
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

fn sweep_config(grid: &str) -> String {
    OSCILLATOR.replacen("\"t_end\"", &format!("\"grid\": {grid},\n  \"t_end\""), 1)
}

#[test]
fn sweep_writes_one_pair_per_point_and_an_index() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{
  "system": "disk_damper",
  "parameters": { "m": 1.0, "r": 1.0, "eta": 0.7, "g": 9.81 },
  "initial": { "x": [0.0], "v": [0.0] },
  "t_end": 0.3,
  "integrator": { "method": "rk4", "dt": 1e-3, "stride": 10 },
  "grid": { "eta": [0.0, 0.35, 0.7] }
}"#,
    );
    let out = dir.path().join("out");
    let o = run(bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for i in 0..3 {
        assert!(out.join(format!("point_{i:04}.csv")).exists());
        assert!(out.join(format!("point_{i:04}.json")).exists());
    }
    let index = json(&out.join("index.json"));
    assert_eq!(index["points"], 3);
    assert_eq!(index["failed"], 0);
    let etas: Vec<f64> = index["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["parameters"]["eta"].as_f64().unwrap())
        .collect();
    assert_eq!(etas, vec![0.0, 0.35, 0.7]);
}

#[test]
fn empty_grid_yields_an_empty_index() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", &sweep_config(r#"{ "eta": [] }"#));
    let out = dir.path().join("out");
    let o = run(bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0));
    let index = json(&out.join("index.json"));
    assert_eq!(index["points"], 0);
    assert!(index["entries"].as_array().unwrap().is_empty());
}

#[test]
fn failing_grid_point_is_recorded_and_others_complete() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", &sweep_config(r#"{ "m": [1.0, 0.0, 2.0] }"#));
    let out = dir.path().join("out");
    let o = run(bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0));
    let index = json(&out.join("index.json"));
    assert_eq!(index["points"], 3);
    assert_eq!(index["failed"], 1);
    let entries = index["entries"].as_array().unwrap();
    assert_eq!(entries[0]["status"], "ok");
    assert_ne!(entries[1]["status"], "ok");
    assert!(entries[1]["error"].is_string());
    assert_eq!(entries[2]["status"], "ok");
    assert!(out.join("point_0002.csv").exists());
}

#[test]
fn sweep_output_is_independent_of_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", &sweep_config(r#"{ "eta": [0.0, 0.1, 0.2, 0.4], "k": [1.0, 9.0] }"#));
    let outs: Vec<PathBuf> = ["one", "many", "again"].iter().map(|n| dir.path().join(n)).collect();
    for (out, threads) in outs.iter().zip([Some("1"), None, None]) {
        let mut cmd = bin();
        cmd.args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(out);
        match threads {
            Some(t) => cmd.env("THREADS", t),
            None => cmd.env_remove("THREADS"),
        };
        assert!(run(&mut cmd).status.success());
    }
    let mut names: Vec<_> = fs::read_dir(&outs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 17);
    for name in &names {
        let first = fs::read(outs[0].join(name)).unwrap();
        for other in &outs[1..] {
            assert_eq!(first, fs::read(other.join(name)).unwrap(), "{name:?}");
        }
    }
}
