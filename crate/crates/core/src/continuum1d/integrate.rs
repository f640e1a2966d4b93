use serde::Serialize;

use crate::quadrature;

use super::{
    checked_density, momentum_rhs, strain, stress, tangent_viscosity, BarConfig, BarError, BarState,
};

/// Fraction of the explicit RK4 diffusion limit accepted by the step guard.
pub const STEP_SAFETY: f64 = 0.5;
/// Real-axis extent of the RK4 stability region.
const RK4_REAL_STABILITY: f64 = 2.785;
/// Growth of `max(|u|, |w|)` beyond this factor aborts the run.
pub const MAX_GROWTH: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BarOptions {
    pub dt: f64,
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarFailure {
    pub t: f64,
    pub error: BarError,
}

/// Recorded bar states with per-sample totals.
#[derive(Clone, Debug, PartialEq)]
pub struct BarTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<BarState>,
    /// `½∫ρ(ε) w² dx`
    pub kinetic: Vec<f64>,
    /// `∫σ ε̇ dx`
    pub dissipation: Vec<f64>,
    /// `∫ρ(ε) dx`
    pub mass: Vec<f64>,
    /// `∫ρ'(ε) ε̇ dx`
    pub mass_rate: Vec<f64>,
    pub failure: Option<BarFailure>,
}

impl BarTrajectory {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    /// `∫∫σ ε̇ dx dt` over the recorded samples.
    pub fn dissipated_energy(&self) -> f64 {
        quadrature::simpson(&self.times, &self.dissipation)
    }
}

struct Totals {
    kinetic: f64,
    dissipation: f64,
    mass: f64,
    mass_rate: f64,
}

fn totals(s: &BarState, cfg: &BarConfig) -> Result<Totals, BarError> {
    let dx = cfg.dx();
    let weights = cfg.weights();
    let eps = strain(&s.u, dx);
    let rate = strain(&s.w, dx);
    let rho = checked_density(&eps, cfg)?;
    let sigma = stress(&rate, cfg);
    let mut t = Totals { kinetic: 0.0, dissipation: 0.0, mass: 0.0, mass_rate: 0.0 };
    for i in 0..cfg.nodes {
        t.kinetic += 0.5 * weights[i] * rho[i] * s.w[i] * s.w[i];
        t.dissipation += weights[i] * sigma[i] * rate[i];
        t.mass += weights[i] * rho[i];
        t.mass_rate += weights[i] * cfg.density.rho_prime(eps[i]) * rate[i];
    }
    Ok(t)
}

/// Largest step the guard accepts at `s`: a fraction of the explicit RK4
/// limit for the viscous term, `2.785·ρ_min·dx² / max ∂σ/∂ε̇`.
pub fn step_limit(s: &BarState, cfg: &BarConfig) -> Result<f64, BarError> {
    let dx = cfg.dx();
    let rho = checked_density(&strain(&s.u, dx), cfg)?;
    let rho_min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    let viscosity = strain(&s.w, dx)
        .iter()
        .map(|&r| tangent_viscosity(r, cfg).abs())
        .fold(0.0, f64::max);
    if viscosity == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(STEP_SAFETY * RK4_REAL_STABILITY * rho_min * dx * dx / viscosity)
}

fn sup_norm(s: &BarState) -> f64 {
    s.u.iter().chain(&s.w).fold(0.0_f64, |m, c| m.max(c.abs()))
}

/// Method-of-lines RK4 for the bar momentum balance.
pub fn integrate_bar(
    s0: &BarState,
    t_end: f64,
    cfg: &BarConfig,
    options: &BarOptions,
) -> Result<BarTrajectory, BarError> {
    cfg.validate()?;
    s0.check(cfg)?;
    let dt = options.dt;
    if !(dt > 0.0) || options.stride == 0 || !(t_end > s0.t) {
        return Err(BarError::InvalidConfig(format!(
            "dt = {dt}, stride = {}, t_end = {t_end} (t0 = {})",
            options.stride, s0.t
        )));
    }
    let limit = step_limit(s0, cfg)?;
    if dt > limit {
        return Err(BarError::StepTooLarge { dt, limit });
    }

    let steps = ((t_end - s0.t) / dt - 1e-9).ceil().max(1.0) as usize;
    let h = (t_end - s0.t) / steps as f64;
    let n = cfg.nodes;
    let norm0 = sup_norm(s0);

    let mut tr = BarTrajectory {
        times: vec![],
        states: vec![],
        kinetic: vec![],
        dissipation: vec![],
        mass: vec![],
        mass_rate: vec![],
        failure: None,
    };
    let record = |tr: &mut BarTrajectory, s: &BarState| -> Result<(), BarError> {
        let tot = totals(s, cfg)?;
        tr.times.push(s.t);
        tr.states.push(s.clone());
        tr.kinetic.push(tot.kinetic);
        tr.dissipation.push(tot.dissipation);
        tr.mass.push(tot.mass);
        tr.mass_rate.push(tot.mass_rate);
        Ok(())
    };
    record(&mut tr, s0)?;

    let shift = |s: &BarState, t: f64, c: f64, du: &[f64], dw: &[f64]| BarState {
        u: (0..n).map(|i| s.u[i] + c * du[i]).collect(),
        w: (0..n).map(|i| s.w[i] + c * dw[i]).collect(),
        t,
    };

    let mut s = s0.clone();
    for step in 0..steps {
        let t = s0.t + step as f64 * h;
        let advance = |s: &BarState| -> Result<BarState, BarError> {
            let a1 = momentum_rhs(s, cfg)?;
            let s2 = shift(s, t + 0.5 * h, 0.5 * h, &s.w, &a1);
            let a2 = momentum_rhs(&s2, cfg)?;
            let s3 = shift(s, t + 0.5 * h, 0.5 * h, &s2.w, &a2);
            let a3 = momentum_rhs(&s3, cfg)?;
            let s4 = shift(s, t + h, h, &s3.w, &a3);
            let a4 = momentum_rhs(&s4, cfg)?;
            let last = step + 1 == steps;
            let t_next = if last { t_end } else { s0.t + (step + 1) as f64 * h };
            let mut next = BarState { u: s.u.clone(), w: s.w.clone(), t: t_next };
            for i in 0..n {
                next.u[i] += h / 6.0 * (s.w[i] + 2.0 * s2.w[i] + 2.0 * s3.w[i] + s4.w[i]);
                next.w[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
            }
            let norm = sup_norm(&next);
            let growth = if norm0 > 0.0 { norm / norm0 } else { 0.0 };
            if !norm.is_finite() || growth > MAX_GROWTH {
                return Err(BarError::Unstable { t: t_next, growth });
            }
            Ok(next)
        };
        match advance(&s) {
            Ok(next) => {
                s = next;
                if step + 1 == steps || (step + 1) % options.stride == 0 {
                    if let Err(error) = record(&mut tr, &s) {
                        tr.failure = Some(BarFailure { t: s.t, error });
                        break;
                    }
                }
            }
            Err(error) => {
                tr.failure = Some(BarFailure { t, error });
                break;
            }
        }
    }
    Ok(tr)
}

/// Total-mass bookkeeping: the change of `M = ∫ρ(ε) dx` between samples
/// against the trapezoidal integral of the exchange rate `∫ρ'(ε) ε̇ dx`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassAuditReport {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub rate: Vec<f64>,
    /// `max_k |ΔM_k − ∫R dt| / Δt_k`
    pub max_defect: f64,
    /// `max_k |M_k − M_0|`
    pub max_mass_drift: f64,
    /// `(M_last − M_0) / (t_last − t_0)`
    pub mean_rate: f64,
}

pub fn mass_audit(samples: &[BarState], cfg: &BarConfig) -> Result<MassAuditReport, BarError> {
    if samples.len() < 3 {
        return Err(BarError::TooFewSamples(samples.len()));
    }
    let mut mass = Vec::with_capacity(samples.len());
    let mut rate = Vec::with_capacity(samples.len());
    for s in samples {
        let tot = totals(s, cfg)?;
        mass.push(tot.mass);
        rate.push(tot.mass_rate);
    }
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let mut max_defect: f64 = 0.0;
    for k in 0..samples.len() - 1 {
        let dt = times[k + 1] - times[k];
        let exchanged = 0.5 * dt * (rate[k] + rate[k + 1]);
        max_defect = max_defect.max((mass[k + 1] - mass[k] - exchanged).abs() / dt);
    }
    let max_mass_drift = mass.iter().map(|m| (m - mass[0]).abs()).fold(0.0, f64::max);
    let last = samples.len() - 1;
    let mean_rate = (mass[last] - mass[0]) / (times[last] - times[0]);
    Ok(MassAuditReport { times, mass, rate, max_defect, max_mass_drift, mean_rate })
}
