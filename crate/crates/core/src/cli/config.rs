//! Strict JSON run configuration.
//!
//! ```json
//! {
//!   "system": "disk_damper",
//!   "parameters": { "m": 1.0, "r": 1.0, "eta": 0.7, "g": 9.81 },
//!   "initial": { "x": [0.0], "v": [0.0] },
//!   "t_end": 10.0,
//!   "integrator": { "method": "rk4", "dt": 1e-3 }
//! }
//! ```
//!
//! Physical parameters have no defaults. Integrator options, output file
//! names and the initial time do.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::continuum1d::{BarConfig, BarOptions, BarState, DensityLaw, DEFAULT_DELTA};
use crate::dynamics::{IntegrateOptions, Method};
use crate::model::{BuiltinSystem, State, SystemModel};

pub const BAR_SYSTEM: &str = "bar";
const BAR_PARAMETERS: [&str; 6] = ["nodes", "length", "rho0", "beta", "alpha", "m"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: String,
    pub parameters: BTreeMap<String, f64>,
    /// `"linear"` or `"exponential"`; bar only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_law: Option<String>,
    pub initial: InitialConfig,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Verification suites run after a simulation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verify: Vec<String>,
    /// Sweep axes: parameter name to the values it takes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<BTreeMap<String, Vec<f64>>>,
}

/// Discrete systems use `x`, `v`; the bar uses either explicit `u`, `w`
/// or a `sine` profile.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sine: Option<SineProfile>,
    #[serde(default)]
    pub t: f64,
}

/// `u = u_amplitude·sin(kπx/L)`, `w = w_amplitude·sin(kπx/L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineProfile {
    pub mode: u32,
    pub u_amplitude: f64,
    pub w_amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_method() -> String {
    "rk4".into()
}

fn default_stride() -> usize {
    1
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { method: default_method(), dt: None, abs_tol: None, rel_tol: None, stride: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_trajectory")]
    pub trajectory: String,
    #[serde(default = "default_diagnostics")]
    pub diagnostics: String,
}

fn default_trajectory() -> String {
    "trajectory.csv".into()
}

fn default_diagnostics() -> String {
    "diagnostics.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { trajectory: default_trajectory(), diagnostics: default_diagnostics() }
    }
}

/// A configuration resolved into ready-to-run objects.
#[derive(Clone)]
pub enum Prepared {
    Discrete { system: BuiltinSystem, model: SystemModel, s0: State, t_end: f64, options: IntegrateOptions },
    Bar { cfg: BarConfig, s0: BarState, t_end: f64, options: BarOptions },
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Resolves and validates everything a run needs.
    pub fn prepare(&self) -> Result<Prepared, CliError> {
        if !self.t_end.is_finite() {
            return Err(config_error(format!("t_end = {} must be finite", self.t_end)));
        }
        if self.system == BAR_SYSTEM {
            self.prepare_bar()
        } else {
            self.prepare_discrete()
        }
    }

    fn prepare_discrete(&self) -> Result<Prepared, CliError> {
        if self.density_law.is_some() {
            return Err(config_error("density_law applies to the bar only"));
        }
        let system = BuiltinSystem::from_parameters(&self.system, &self.parameters)
            .map_err(|e| config_error(e.to_string()))?;
        let model = system.build().map_err(|e| config_error(e.to_string()))?;
        let init = &self.initial;
        if init.u.is_some() || init.w.is_some() || init.sine.is_some() {
            return Err(config_error("initial.u, initial.w and initial.sine apply to the bar only"));
        }
        let (Some(x), Some(v)) = (init.x.clone(), init.v.clone()) else {
            return Err(config_error("initial.x and initial.v are required"));
        };
        let s0 = State::new(x, v, init.t).map_err(|e| config_error(e.to_string()))?;
        model.check_state(&s0).map_err(|e| config_error(e.to_string()))?;
        if !(self.t_end > s0.t) {
            return Err(config_error(format!("t_end = {} must exceed initial.t = {}", self.t_end, s0.t)));
        }
        let ic = &self.integrator;
        let method = match ic.method.as_str() {
            "rk4" => {
                if ic.abs_tol.is_some() || ic.rel_tol.is_some() {
                    return Err(config_error("abs_tol and rel_tol apply to rkf45 only"));
                }
                Method::Rk4 { dt: ic.dt.unwrap_or(1e-3) }
            }
            "rkf45" => {
                if ic.dt.is_some() {
                    return Err(config_error("dt applies to rk4 only"));
                }
                Method::Rkf45 { abs_tol: ic.abs_tol.unwrap_or(1e-10), rel_tol: ic.rel_tol.unwrap_or(1e-10) }
            }
            other => return Err(config_error(format!("unknown integrator method {other:?}"))),
        };
        let options = IntegrateOptions { method, stride: ic.stride };
        check_integrator(&options)?;
        Ok(Prepared::Discrete { system, model, s0, t_end: self.t_end, options })
    }

    fn prepare_bar(&self) -> Result<Prepared, CliError> {
        let p = &self.parameters;
        if let Some(extra) = p.keys().find(|k| !BAR_PARAMETERS.contains(&k.as_str()) && *k != "delta") {
            return Err(config_error(format!("unknown bar parameter {extra:?}")));
        }
        let get = |name: &str| {
            p.get(name).copied().ok_or_else(|| config_error(format!("bar parameter {name:?} is required")))
        };
        let nodes = get("nodes")?;
        if !(nodes >= 3.0 && nodes.fract() == 0.0 && nodes <= 1e7) {
            return Err(config_error(format!("nodes = {nodes} must be an integer of at least 3")));
        }
        let (rho0, beta) = (get("rho0")?, get("beta")?);
        let density = match self.density_law.as_deref() {
            Some("linear") => DensityLaw::Linear { rho0, beta },
            Some("exponential") => DensityLaw::Exponential { rho0, beta },
            Some(other) => return Err(config_error(format!("unknown density_law {other:?}"))),
            None => return Err(config_error("density_law is required for the bar")),
        };
        let cfg = BarConfig::new(
            nodes as usize,
            get("length")?,
            density,
            get("alpha")?,
            get("m")?,
            p.get("delta").copied().unwrap_or(DEFAULT_DELTA),
        )
        .map_err(|e| config_error(e.to_string()))?;

        let init = &self.initial;
        if init.x.is_some() || init.v.is_some() {
            return Err(config_error("the bar takes initial.u/initial.w or initial.sine, not x/v"));
        }
        let mut s0 = match (&init.u, &init.w, &init.sine) {
            (Some(u), Some(w), None) => BarState { u: u.clone(), w: w.clone(), t: init.t },
            (None, None, Some(sine)) => {
                let k = f64::from(sine.mode) * PI / cfg.length;
                let profile: Vec<f64> = cfg.node_positions().iter().map(|x| (k * x).sin()).collect();
                let mut s = BarState {
                    u: profile.iter().map(|p| sine.u_amplitude * p).collect(),
                    w: profile.iter().map(|p| sine.w_amplitude * p).collect(),
                    t: init.t,
                };
                let last = cfg.nodes - 1;
                s.u[last] = 0.0;
                s.w[last] = 0.0;
                s
            }
            _ => return Err(config_error("bar initial state needs both u and w, or sine alone")),
        };
        if !s0.u.iter().chain(&s0.w).all(|c| c.is_finite()) || !s0.t.is_finite() {
            return Err(config_error("initial bar state must be finite"));
        }
        s0.t = init.t;
        s0.check(&cfg).map_err(|e| config_error(e.to_string()))?;
        if !(self.t_end > s0.t) {
            return Err(config_error(format!("t_end = {} must exceed initial.t = {}", self.t_end, s0.t)));
        }
        let ic = &self.integrator;
        if ic.method != "rk4" || ic.abs_tol.is_some() || ic.rel_tol.is_some() {
            return Err(config_error("the bar integrates with rk4 only"));
        }
        let dt = ic.dt.unwrap_or(1e-3);
        if !(dt > 0.0 && dt.is_finite()) || ic.stride == 0 {
            return Err(config_error(format!("dt = {dt}, stride = {}: need dt > 0 and stride ≥ 1", ic.stride)));
        }
        Ok(Prepared::Bar { cfg, s0, t_end: self.t_end, options: BarOptions { dt, stride: ic.stride } })
    }
}

fn check_integrator(options: &IntegrateOptions) -> Result<(), CliError> {
    let ok = options.stride > 0
        && match options.method {
            Method::Rk4 { dt } => dt > 0.0 && dt.is_finite(),
            Method::Rkf45 { abs_tol, rel_tol } => abs_tol > 0.0 && rel_tol >= 0.0,
        };
    if ok {
        Ok(())
    } else {
        Err(config_error(format!("invalid integrator options {options:?}")))
    }
}
