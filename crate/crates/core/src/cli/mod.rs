//! File-driven front end: `simulate`, `verify` and `sweep`.
//!
//! Exit codes: 0 success, 1 verification failed, 2 configuration error or
//! unknown suite, 3 physics failure during a run (diagnostics are still
//! written), 4 output could not be written.

pub mod config;
pub mod verify;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

pub use config::{Prepared, RunConfig};
pub use verify::{Check, SuiteReport, VerifyReport, SUITES};

use crate::continuum1d::{integrate_bar, mass_audit, BarConfig, BarOptions, BarState};
use crate::dynamics::{integrate, IntegrateOptions, Trajectory};
use crate::model::{State, SystemModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown verification suite {0:?} (known: {known})", known = SUITES.join(", "))]
    UnknownSuite(String),
    #[error("run failed: {0}")]
    Runtime(String),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::UnknownSuite(_) => EXIT_CONFIG,
            Self::Runtime(_) => EXIT_RUNTIME,
            Self::Io(_) => EXIT_IO,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::UnknownSuite(_) => "unknown_suite",
            Self::Runtime(_) => "runtime",
            Self::Io(_) => "io",
        }
    }

    /// Machine-readable error record printed on stderr.
    pub fn record(&self) -> Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() } })
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text
}

/// Round-trip formatting: 17 significant digits.
fn num(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("writing to a String cannot fail");
}

fn csv_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        num(out, v);
    }
    out.push('\n');
}

/// In-memory result of one run, before anything touches the disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub diagnostics: Value,
    /// Physics error that ended the run early.
    pub failure: Option<String>,
}

/// Runs a prepared configuration. Physics errors end up in
/// [`RunOutput::failure`], never in `Err`.
pub fn run(cfg: &RunConfig, prepared: &Prepared) -> RunOutput {
    match prepared {
        Prepared::Discrete { model, s0, t_end, options, .. } => run_discrete(cfg, model, s0, *t_end, options),
        Prepared::Bar { cfg: bar, s0, t_end, options } => run_bar(cfg, bar, s0, *t_end, options),
    }
}

fn discrete_csv(labels: &[String], tr: &Trajectory) -> String {
    let mut out = String::from("t");
    for suffix in ["", "dot", "ddot"] {
        for l in labels {
            write!(out, ",{l}{suffix}").expect("writing to a String cannot fail");
        }
    }
    out.push_str(",E,Qpow,balance_defect\n");
    for k in 0..tr.len() {
        let s = &tr.states[k];
        let row = std::iter::once(tr.times[k])
            .chain(s.x.iter().copied())
            .chain(s.v.iter().copied())
            .chain(tr.accels[k].iter().copied())
            .chain([tr.energy[k], tr.diss_power[k], tr.balance_defect[k]]);
        csv_row(&mut out, row);
    }
    out
}

fn run_discrete(cfg: &RunConfig, model: &SystemModel, s0: &State, t_end: f64, options: &IntegrateOptions) -> RunOutput {
    let header = json!({
        "system": cfg.system,
        "parameters": cfg.parameters,
        "initial": s0,
        "t_end": t_end,
        "integrator": options,
    });
    let tr = match integrate(model, s0, t_end, options) {
        Ok(tr) => tr,
        Err(e) => {
            let message = e.to_string();
            let mut diagnostics = header;
            diagnostics["completed"] = json!(false);
            diagnostics["samples"] = json!(0);
            diagnostics["failure"] = json!({ "t": s0.t, "message": message, "state": s0 });
            let csv = discrete_csv(model.labels(), &empty_trajectory(model));
            return RunOutput { csv, diagnostics, failure: Some(message) };
        }
    };
    let csv = discrete_csv(model.labels(), &tr);
    let e0 = tr.energy[0];
    let e1 = *tr.energy.last().expect("initial sample is recorded");
    let dissipated = tr.dissipated_energy();
    let failure = tr.failure.as_ref().map(|f| f.error.to_string());
    let mut diagnostics = header;
    diagnostics["completed"] = json!(tr.completed());
    diagnostics["samples"] = json!(tr.len());
    diagnostics["failure"] = match &tr.failure {
        Some(f) => json!({ "t": f.t, "message": f.error.to_string(), "state": f.last_state }),
        None => Value::Null,
    };
    diagnostics["final_state"] = json!(tr.final_state());
    diagnostics["energy"] = json!({
        "initial": e0,
        "final": e1,
        "dissipated": dissipated,
        "balance_residual": (e1 - e0) + dissipated,
        "max_increase": if tr.len() > 1 { tr.max_energy_increase() } else { 0.0 },
    });
    diagnostics["max_balance_defect"] = json!(tr.balance_defect.iter().copied().fold(0.0, f64::max));
    RunOutput { csv, diagnostics, failure }
}

fn empty_trajectory(model: &SystemModel) -> Trajectory {
    Trajectory {
        labels: model.labels().to_vec(),
        times: vec![],
        states: vec![],
        accels: vec![],
        energy: vec![],
        diss_power: vec![],
        balance_defect: vec![],
        failure: None,
    }
}

fn bar_header(nodes: usize) -> String {
    let mut out = String::from("t");
    for field in ["u", "w"] {
        for i in 0..nodes {
            write!(out, ",{field}_{i}").expect("writing to a String cannot fail");
        }
    }
    out.push('\n');
    out
}

fn run_bar(cfg: &RunConfig, bar: &BarConfig, s0: &BarState, t_end: f64, options: &BarOptions) -> RunOutput {
    let mut diagnostics = json!({
        "system": cfg.system,
        "parameters": cfg.parameters,
        "density_law": bar.density,
        "nodes": bar.nodes,
        "dx": bar.dx(),
        "t_end": t_end,
        "integrator": options,
    });
    let mut csv = bar_header(bar.nodes);
    let tr = match integrate_bar(s0, t_end, bar, options) {
        Ok(tr) => tr,
        Err(e) => {
            let message = e.to_string();
            diagnostics["completed"] = json!(false);
            diagnostics["samples"] = json!(0);
            diagnostics["failure"] = json!({ "t": s0.t, "message": message });
            return RunOutput { csv, diagnostics, failure: Some(message) };
        }
    };
    for s in &tr.states {
        csv_row(&mut csv, std::iter::once(s.t).chain(s.u.iter().copied()).chain(s.w.iter().copied()));
    }
    let failure = tr.failure.as_ref().map(|f| f.error.to_string());
    diagnostics["completed"] = json!(tr.completed());
    diagnostics["samples"] = json!(tr.times.len());
    diagnostics["failure"] = match &tr.failure {
        Some(f) => json!({ "t": f.t, "message": f.error.to_string() }),
        None => Value::Null,
    };
    diagnostics["series"] = json!({
        "t": tr.times,
        "kinetic": tr.kinetic,
        "dissipation": tr.dissipation,
        "mass": tr.mass,
        "mass_rate": tr.mass_rate,
    });
    diagnostics["dissipated_energy"] = json!(tr.dissipated_energy());
    diagnostics["mass_audit"] = match mass_audit(&tr.states, bar) {
        Ok(r) => json!({
            "max_defect": r.max_defect,
            "max_mass_drift": r.max_mass_drift,
            "mean_rate": r.mean_rate,
        }),
        Err(_) => Value::Null,
    };
    RunOutput { csv, diagnostics, failure }
}

fn check_suites(ids: &[String]) -> Result<Vec<&'static str>, CliError> {
    let mut out: Vec<&'static str> = Vec::new();
    if ids.is_empty() {
        return Ok(SUITES.to_vec());
    }
    for id in ids {
        if id == "all" {
            for s in SUITES {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
            continue;
        }
        let known = SUITES.iter().find(|s| **s == id).ok_or_else(|| CliError::UnknownSuite(id.clone()))?;
        if !out.contains(known) {
            out.push(known);
        }
    }
    Ok(out)
}

/// Runs `ids` (all suites when empty) and assembles the report.
pub fn verify_report(ids: &[String], seed: u64) -> Result<VerifyReport, CliError> {
    let ids = check_suites(ids)?;
    let suites = ids
        .par_iter()
        .map(|id| verify::run_suite(id, seed).expect("suite ids are checked"))
        .collect();
    Ok(VerifyReport::new(seed, suites))
}

pub fn cmd_verify(ids: &[String], report: &Path, seed: u64) -> Result<VerifyReport, CliError> {
    let rep = verify_report(ids, seed)?;
    write_file(report, &to_json(&rep))?;
    Ok(rep)
}

/// Outcome of a successful `simulate`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulateOutcome {
    pub trajectory: PathBuf,
    pub diagnostics: PathBuf,
    pub verify: Option<VerifyReport>,
}

impl SimulateOutcome {
    pub fn exit_code(&self) -> i32 {
        match &self.verify {
            Some(r) if !r.passed => EXIT_VERIFY_FAILED,
            _ => EXIT_OK,
        }
    }
}

/// Checks a configuration without running it.
pub fn load_and_prepare(path: &Path) -> Result<(RunConfig, Prepared), CliError> {
    let cfg = RunConfig::load(path)?;
    let prepared = cfg.prepare()?;
    check_suites(&cfg.verify)?;
    Ok((cfg, prepared))
}

/// Writes the run's files into `out`. Returns `Err(Runtime)` after writing
/// when the run ended early.
fn write_run(cfg: &RunConfig, prepared: &Prepared, out: &Path, seed: u64) -> Result<SimulateOutcome, CliError> {
    let result = run(cfg, prepared);
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let trajectory = out.join(&cfg.output.trajectory);
    let diagnostics = out.join(&cfg.output.diagnostics);
    write_file(&trajectory, &result.csv)?;
    write_file(&diagnostics, &to_json(&result.diagnostics))?;
    if let Some(msg) = result.failure {
        return Err(CliError::Runtime(msg));
    }
    let verify = if cfg.verify.is_empty() {
        None
    } else {
        let rep = verify_report(&cfg.verify, seed)?;
        write_file(&out.join("verify.json"), &to_json(&rep))?;
        Some(rep)
    };
    Ok(SimulateOutcome { trajectory, diagnostics, verify })
}

pub fn cmd_simulate(config: &Path, out: &Path) -> Result<SimulateOutcome, CliError> {
    let (cfg, prepared) = load_and_prepare(config)?;
    write_run(&cfg, &prepared, out, crate::sampling::DEFAULT_SEED)
}

/// One line of the sweep index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepEntry {
    pub index: usize,
    pub parameters: BTreeMap<String, f64>,
    pub status: &'static str,
    pub exit_code: i32,
    pub error: Option<String>,
    pub trajectory: Option<String>,
    pub diagnostics: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepIndex {
    pub system: String,
    pub axes: BTreeMap<String, Vec<f64>>,
    pub points: usize,
    pub failed: usize,
    pub entries: Vec<SweepEntry>,
}

/// Cartesian product of the axes in key order; empty when there are no
/// axes or any axis is empty.
pub fn grid_points(axes: &BTreeMap<String, Vec<f64>>) -> Vec<BTreeMap<String, f64>> {
    if axes.is_empty() || axes.values().any(|v| v.is_empty()) {
        return vec![];
    }
    let mut points = vec![BTreeMap::new()];
    for (name, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.insert(name.clone(), v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Worker count from `THREADS`, or `None` for the machine default.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("THREADS = {v:?} must be a positive integer"))),
        },
    }
}

fn sweep_point(base: &RunConfig, index: usize, point: &BTreeMap<String, f64>, out: &Path) -> SweepEntry {
    let mut cfg = base.clone();
    cfg.grid = None;
    cfg.verify.clear();
    cfg.parameters.extend(point.iter().map(|(k, v)| (k.clone(), *v)));
    cfg.output.trajectory = format!("point_{index:04}.csv");
    cfg.output.diagnostics = format!("point_{index:04}.json");
    let mut entry = SweepEntry {
        index,
        parameters: cfg.parameters.clone(),
        status: "ok",
        exit_code: EXIT_OK,
        error: None,
        trajectory: None,
        diagnostics: None,
    };
    let result = cfg.prepare().and_then(|prepared| {
        entry.trajectory = Some(cfg.output.trajectory.clone());
        entry.diagnostics = Some(cfg.output.diagnostics.clone());
        write_run(&cfg, &prepared, out, crate::sampling::DEFAULT_SEED)
    });
    if let Err(e) = result {
        entry.status = "failed";
        entry.exit_code = e.exit_code();
        entry.error = Some(e.to_string());
    }
    entry
}

pub fn cmd_sweep(config: &Path, out: &Path) -> Result<SweepIndex, CliError> {
    let base = RunConfig::load(config)?;
    let axes = base.grid.clone().ok_or_else(|| CliError::Config("sweep needs a \"grid\"".into()))?;
    for (name, values) in &axes {
        if !base.parameters.contains_key(name) {
            return Err(CliError::Config(format!("grid axis {name:?} is not a parameter of the base configuration")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("grid axis {name:?} has non-finite values")));
        }
    }
    let points = grid_points(&axes);
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_cap()? {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?
    };
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        points.par_iter().enumerate().map(|(i, p)| sweep_point(&base, i, p, out)).collect()
    });
    let index = SweepIndex {
        system: base.system.clone(),
        axes,
        points: entries.len(),
        failed: entries.iter().filter(|e| e.status != "ok").count(),
        entries,
    };
    write_file(&out.join("index.json"), &to_json(&index))?;
    Ok(index)
}
