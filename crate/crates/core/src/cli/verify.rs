//! Verification suites behind `tepdyn verify`.
//!
//! Random states come from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`; a draw on `[lo, hi)` is `lo + (hi − lo)·u` with `u`
//! the generator's standard `f64`. Each suite restarts the stream from the
//! report seed, so suites are reproducible one at a time.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::autodiff::{self, ScalarField};
use crate::continuum1d::{
    self, discrete_lagrangian_residual, integrate_bar, mass_audit, momentum_terms,
    BarConfig, BarOptions, BarState, DensityLaw, DEFAULT_DELTA,
};
use crate::dynamics::{self, integrate, IntegrateOptions};
use crate::model::{
    build_disk_damper, build_rayleigh_oscillator, norton_hoff_dissipation, DiskDamper, State, SystemModel,
};
use crate::sampling::{self, SampleBox, SampleRng};
use crate::tep;

pub const SUITES: [&str; 9] = [
    "eq3-equivalence",
    "power-identity",
    "euler-homogeneity",
    "norton-hoff-closed-form",
    "energy-balance",
    "conservative-limit",
    "el-pde-equivalence",
    "mass-audit",
    "ad-vs-fd",
];

pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng::seed_from_u64(seed), uniform draw lo + (hi - lo) * gen::<f64>(), restarted per suite";

/// Reference disk: `m = r = 1`, `η = 0.7`, `g = 9.81`.
pub const REFERENCE_DISK: DiskDamper = DiskDamper { m: 1.0, r: 1.0, eta: 0.7, g: 9.81 };
pub const DISK_BALANCE_SAMPLES: usize = 1000;
pub const DISK_BALANCE_TOL: f64 = 1e-10;
pub const POWER_SAMPLES: usize = 1000;
pub const POWER_TOL: f64 = 1e-12;
pub const EULER_TOL: f64 = 1e-10;
pub const CLOSED_FORM_TOL: f64 = 1e-10;
pub const ENERGY_BALANCE_TOL: f64 = 1e-6;
pub const CONSERVATION_TOL: f64 = 1e-8;
pub const MIN_ORDER: f64 = 1.9;
pub const FD_STEP: f64 = 1e-6;
pub const FD_TOL: f64 = 1e-6;
const FD_SAMPLES: usize = 100;
/// Round-off allowance between consecutive energy samples, relative to `max |E|`.
pub const MONOTONE_SLACK: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: &'static str,
    pub measured: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, relation: &'static str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            relation,
            measured,
            comparison: Comparison::AtMost,
            threshold,
            passed: measured <= threshold,
            note: None,
        }
    }

    pub fn at_least(name: impl Into<String>, relation: &'static str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            relation,
            measured,
            comparison: Comparison::AtLeast,
            threshold,
            passed: measured >= threshold,
            note: None,
        }
    }

    fn errored(name: impl Into<String>, relation: &'static str, threshold: f64, err: impl ToString) -> Self {
        Self {
            name: name.into(),
            relation,
            measured: f64::NAN,
            comparison: Comparison::AtMost,
            threshold,
            passed: false,
            note: Some(err.to_string()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub id: &'static str,
    pub relation: &'static str,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub rng: &'static str,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn new(seed: u64, suites: Vec<SuiteReport>) -> Self {
        let passed = suites.iter().all(|s| s.passed);
        Self { seed, rng: RNG_DESCRIPTION, suites, passed }
    }
}

pub fn is_known(id: &str) -> bool {
    SUITES.contains(&id)
}

/// Runs one suite; `None` for an unknown id.
pub fn run_suite(id: &str, seed: u64) -> Option<SuiteReport> {
    let (id, relation, checks) = match id {
        "eq3-equivalence" => (SUITES[0], DISK_BALANCE_RELATION, disk_balance_suite(seed)),
        "power-identity" => (SUITES[1], "q·v = Q", power_identity_suite(seed)),
        "euler-homogeneity" => (SUITES[2], EULER_RELATION, euler_suite(seed)),
        "norton-hoff-closed-form" => (SUITES[3], CLOSED_FORM_RELATION, closed_form_suite(seed)),
        "energy-balance" => (SUITES[4], ENERGY_RELATION, energy_balance_suite()),
        "conservative-limit" => (SUITES[5], "Q = 0 ⇒ E(t) = E(0)", conservative_suite()),
        "el-pde-equivalence" => (SUITES[6], EL_RELATION, el_pde_suite()),
        "mass-audit" => (SUITES[7], MASS_RELATION, mass_audit_suite()),
        "ad-vs-fd" => (SUITES[8], FD_RELATION, ad_vs_fd_suite(seed)),
        _ => return None,
    };
    let passed = checks.iter().all(|c| c.passed);
    Some(SuiteReport { id, relation, checks, passed })
}

const DISK_BALANCE_RELATION: &str =
    "D_K + ∂G/∂φ + q = 2r²m(1+sinφ)φ̈ + r²m cosφ φ̇² + r²η(1+cosφ)²φ̇ + rmg cosφ";
const EULER_RELATION: &str = "Q(x, λv) = λⁿQ(x, v) ⇒ q = (1/n)·∂Q/∂v";
const CLOSED_FORM_RELATION: &str = "Q = α‖v‖^m ⇒ q = α‖v‖^(m−2)·v";
const ENERGY_RELATION: &str = "dE/dt = −Q with E = v·∂K/∂v − K + G";
const EL_RELATION: &str =
    "Euler-Lagrange equations of the discrete bar Lagrangian ≡ ρü = ∂σ/∂x − ρ'ε̇u̇ − ½∂x(u̇²ρ')";
const MASS_RELATION: &str = "dM/dt = ∫ρ'(ε)ε̇ dx, M = ∫ρ(ε) dx";
const FD_RELATION: &str = "forward-mode derivatives = central differences";

// ---------------------------------------------------------- disk balance

/// Closed-form balance of the disk with a horizontal damper.
pub fn disk_balance_lhs(p: &DiskDamper, phi: f64, w: f64, a: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    let r2 = p.r * p.r;
    2.0 * r2 * p.m * (1.0 + s) * a + r2 * p.m * c * w * w + r2 * p.eta * (1.0 + c).powi(2) * w + p.r * p.m * p.g * c
}

/// Largest `|pipeline − closed form| / (1 + |closed form|)` over seeded
/// states away from the degenerate angle.
pub fn disk_balance_deviation(model: &SystemModel, p: &DiskDamper, samples: usize, seed: u64) -> Result<f64, dynamics::DynamicsError> {
    let mut rng = sampling::seeded(seed);
    let mut worst: f64 = 0.0;
    let mut taken = 0;
    while taken < samples {
        let phi = sampling::uniform(&mut rng, -PI, PI);
        let w = sampling::uniform(&mut rng, -10.0, 10.0);
        let a = sampling::uniform(&mut rng, -100.0, 100.0);
        if (phi + FRAC_PI_2).abs() < 0.1 {
            continue;
        }
        taken += 1;
        let s = State { x: vec![phi], v: vec![w], t: 0.0 };
        let pipeline = dynamics::residual(model, &s, &[a])?.residual[0];
        let lhs = disk_balance_lhs(p, phi, w, a);
        worst = worst.max((pipeline - lhs).abs() / (1.0 + lhs.abs()));
    }
    Ok(worst)
}

pub fn disk_balance_check(model: &SystemModel, p: &DiskDamper, seed: u64) -> Check {
    let name = "disk_damper residual vs closed form, 1000 states";
    match disk_balance_deviation(model, p, DISK_BALANCE_SAMPLES, seed) {
        Ok(d) => Check::at_most(name, DISK_BALANCE_RELATION, d, DISK_BALANCE_TOL),
        Err(e) => Check::errored(name, DISK_BALANCE_RELATION, DISK_BALANCE_TOL, e),
    }
}

fn disk_balance_suite(seed: u64) -> Vec<Check> {
    let p = REFERENCE_DISK;
    match build_disk_damper(p.m, p.r, p.eta, p.g) {
        Ok(model) => vec![disk_balance_check(&model, &p, seed)],
        Err(e) => vec![Check::errored("build disk_damper", DISK_BALANCE_RELATION, DISK_BALANCE_TOL, e)],
    }
}

// ---------------------------------------------------- dissipation fields

/// The dissipation functions exercised by the power and homogeneity suites,
/// with their sampling boxes and exact homogeneity degrees.
pub fn reference_dissipations() -> Vec<(String, ScalarField, SampleBox, f64)> {
    let p = REFERENCE_DISK;
    let disk = build_disk_damper(p.m, p.r, p.eta, p.g).expect("reference disk is valid");
    let osc = build_rayleigh_oscillator(1.0, 1.0, 0.3).expect("reference oscillator is valid");
    let mut out = vec![
        ("disk_damper Q".to_string(), disk.dissipation().clone(), SampleBox::uniform(1, (-PI, PI), (-10.0, 10.0)), 2.0),
        ("rayleigh Q".to_string(), osc.dissipation().clone(), SampleBox::uniform(1, (-10.0, 10.0), (-10.0, 10.0)), 2.0),
    ];
    for m in [1.5, 2.0, 3.0] {
        out.push((
            format!("Norton-Hoff Q, m = {m}, n = 3"),
            norton_hoff_dissipation(3, 2.5, m),
            SampleBox::uniform(3, (-1.0, 1.0), (-10.0, 10.0)),
            m,
        ));
    }
    out
}

fn draw_state(bx: &SampleBox, rng: &mut SampleRng) -> State {
    let (x, v) = bx.draw(rng);
    State { x, v, t: 0.0 }
}

fn power_identity_suite(seed: u64) -> Vec<Check> {
    reference_dissipations()
        .into_iter()
        .map(|(name, q, bx, _)| {
            let name = format!("{name}: max |q·v − Q| / Q over {POWER_SAMPLES} states");
            let mut rng = sampling::seeded(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..POWER_SAMPLES {
                let s = draw_state(&bx, &mut rng);
                let (force, value) = match (tep::dissipative_force(&q, &s), autodiff::eval(&q, &s)) {
                    (Ok(f), Ok(v)) => (f, v),
                    (Err(e), _) => return Check::errored(name, "q·v = Q", POWER_TOL, e),
                    (_, Err(e)) => return Check::errored(name, "q·v = Q", POWER_TOL, e),
                };
                let dev = (force.power - value).abs();
                worst = worst.max(if value > 0.0 { dev / value } else { dev });
            }
            Check::at_most(name, "q·v = Q", worst, POWER_TOL)
        })
        .collect()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn euler_suite(seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    for (name, q, bx, degree) in reference_dissipations() {
        let mut rng = sampling::seeded(seed);
        let mut worst_force: f64 = 0.0;
        let mut worst_degree: f64 = 0.0;
        let mut failure = None;
        for _ in 0..POWER_SAMPLES {
            let s = draw_state(&bx, &mut rng);
            let result = (|| -> Result<(f64, f64), String> {
                let n = tep::homogeneity_degree(&q, &s).map_err(|e| e.to_string())?;
                let n = n.ok_or("not homogeneous at this state")?;
                let force = tep::dissipative_force(&q, &s).map_err(|e| e.to_string())?;
                let grad = autodiff::grad_v(&q, &s).map_err(|e| e.to_string())?;
                let shortcut: Vec<f64> = grad.iter().map(|g| g / n).collect();
                Ok((rel_diff(&force.q, &shortcut), (n - degree).abs() / degree))
            })();
            match result {
                Ok((f, d)) => {
                    worst_force = worst_force.max(f);
                    worst_degree = worst_degree.max(d);
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        let force_name = format!("{name}: q vs (1/n)·∂Q/∂v");
        let degree_name = format!("{name}: measured degree vs {degree}");
        match failure {
            Some(e) => {
                checks.push(Check::errored(force_name, EULER_RELATION, EULER_TOL, &e));
                checks.push(Check::errored(degree_name, EULER_RELATION, tep::HOMOGENEITY_TOL, e));
            }
            None => {
                checks.push(Check::at_most(force_name, EULER_RELATION, worst_force, EULER_TOL));
                checks.push(Check::at_most(degree_name, EULER_RELATION, worst_degree, tep::HOMOGENEITY_TOL));
            }
        }
    }
    checks
}

fn closed_form_suite(seed: u64) -> Vec<Check> {
    let alpha = 2.5;
    let mut checks = Vec::new();
    for dim in [1, 3, 6] {
        for m in [1.5, 2.0, 3.0] {
            let name = format!("dimension {dim}, m = {m}");
            let q = norton_hoff_dissipation(dim, alpha, m);
            let bx = SampleBox::uniform(dim, (-1.0, 1.0), (-10.0, 10.0));
            let mut rng = sampling::seeded(seed);
            let mut worst: f64 = 0.0;
            let mut error = None;
            for _ in 0..POWER_SAMPLES {
                let s = draw_state(&bx, &mut rng);
                match tep::dissipative_force(&q, &s) {
                    Ok(f) => {
                        let norm = s.v.iter().map(|c| c * c).sum::<f64>().sqrt();
                        let closed: Vec<f64> = s.v.iter().map(|c| alpha * norm.powf(m - 2.0) * c).collect();
                        worst = worst.max(rel_diff(&closed, &f.q));
                    }
                    Err(e) => {
                        error = Some(e);
                        break;
                    }
                }
            }
            checks.push(match error {
                Some(e) => Check::errored(name, CLOSED_FORM_RELATION, CLOSED_FORM_TOL, e),
                None => Check::at_most(name, CLOSED_FORM_RELATION, worst, CLOSED_FORM_TOL),
            });
        }
    }
    checks
}

// ------------------------------------------------------------- energy

/// Energy diagnostics of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyAudit {
    pub t_reached: f64,
    pub completed: bool,
    pub energy_change: f64,
    pub dissipated: f64,
    /// `|ΔE + ∫Q dt| / |ΔE|`
    pub balance: f64,
    /// `max_k (E_{k+1} − E_k) / max |E|`
    pub max_rise: f64,
    /// `max_k |E_k − E_0|`
    pub max_deviation: f64,
    pub failure: Option<String>,
}

pub fn energy_audit(model: &SystemModel, s0: &State, t_end: f64, dt: f64) -> Result<EnergyAudit, dynamics::DynamicsError> {
    let tr = integrate(model, s0, t_end, &IntegrateOptions::rk4(dt))?;
    let e0 = tr.energy[0];
    let e_last = *tr.energy.last().expect("initial sample is recorded");
    let scale = tr.energy.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let energy_change = e_last - e0;
    let dissipated = tr.dissipated_energy();
    Ok(EnergyAudit {
        t_reached: *tr.times.last().expect("initial sample is recorded"),
        completed: tr.completed(),
        energy_change,
        dissipated,
        balance: (energy_change + dissipated).abs() / energy_change.abs(),
        max_rise: if tr.len() > 1 { tr.max_energy_increase() / scale } else { 0.0 },
        max_deviation: tr.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max),
        failure: tr.failure.map(|f| format!("t = {}: {}", f.t, f.error)),
    })
}

fn energy_checks(label: &str, audit: Result<EnergyAudit, dynamics::DynamicsError>, t_end: f64) -> Vec<Check> {
    let audit = match audit {
        Ok(a) => a,
        Err(e) => return vec![Check::errored(label, ENERGY_RELATION, ENERGY_BALANCE_TOL, e)],
    };
    let mut reached = Check::at_least(format!("{label}: time reached"), ENERGY_RELATION, audit.t_reached, t_end);
    if let Some(f) = &audit.failure {
        reached = reached.with_note(f.clone());
    }
    vec![
        reached,
        Check::at_most(format!("{label}: E nonincreasing (max rise / max |E|)"), ENERGY_RELATION, audit.max_rise, MONOTONE_SLACK),
        Check::at_most(format!("{label}: |ΔE + ∫Q dt| / |ΔE|"), ENERGY_RELATION, audit.balance, ENERGY_BALANCE_TOL),
    ]
}

fn energy_balance_suite() -> Vec<Check> {
    let p = REFERENCE_DISK;
    let model = match build_disk_damper(p.m, p.r, p.eta, p.g) {
        Ok(m) => m,
        Err(e) => return vec![Check::errored("build disk_damper", ENERGY_RELATION, ENERGY_BALANCE_TOL, e)],
    };
    let s0 = State { x: vec![0.0], v: vec![0.0], t: 0.0 };
    let mut checks = energy_checks("disk_damper from rest at φ = 0, t ∈ [0, 10], rk4 dt = 1e-3", energy_audit(&model, &s0, 10.0, 1e-3), 10.0);
    let mut window = energy_checks("disk_damper, pre-singular window t ∈ [0, 0.5]", energy_audit(&model, &s0, 0.5, 1e-3), 0.5);
    for c in &mut window {
        c.note.get_or_insert_with(|| "the path reaches the degenerate angle φ = −π/2 as t grows".into());
    }
    checks.extend(window);
    checks
}

fn conservative_suite() -> Vec<Check> {
    let mut checks = Vec::new();
    let relation = "Q = 0 ⇒ E(t) = E(0)";
    let name = "rayleigh_oscillator m = k = 1, η = 0, x0 = 1, t ∈ [0, 10], rk4 dt = 1e-4: max |E − E0| / |E0|";
    let run = build_rayleigh_oscillator(1.0, 1.0, 0.0)
        .map_err(dynamics::DynamicsError::from)
        .and_then(|m| energy_audit(&m, &State { x: vec![1.0], v: vec![0.0], t: 0.0 }, 10.0, 1e-4));
    checks.push(match run {
        Ok(a) if a.completed => Check::at_most(name, relation, a.max_deviation / 0.5, CONSERVATION_TOL),
        Ok(a) => Check::errored(name, relation, CONSERVATION_TOL, a.failure.unwrap_or_default()),
        Err(e) => Check::errored(name, relation, CONSERVATION_TOL, e),
    });
    let name = "disk_damper η = 0 from rest at φ = 0, t ∈ [0, 0.4], rk4 dt = 1e-4: max |E − E0| / (m·g·r)";
    let run = build_disk_damper(1.0, 1.0, 0.0, 9.81)
        .map_err(dynamics::DynamicsError::from)
        .and_then(|m| energy_audit(&m, &State { x: vec![0.0], v: vec![0.0], t: 0.0 }, 0.4, 1e-4));
    // E0 = 0 here, so the deviation is taken relative to m·g·r.
    checks.push(match run {
        Ok(a) if a.completed => Check::at_most(name, relation, a.max_deviation / 9.81, CONSERVATION_TOL)
            .with_note("E0 = 0; deviation measured relative to m·g·r"),
        Ok(a) => Check::errored(name, relation, CONSERVATION_TOL, a.failure.unwrap_or_default()),
        Err(e) => Check::errored(name, relation, CONSERVATION_TOL, e),
    });
    checks
}

// ---------------------------------------------------------------- bar

/// Manufactured smooth bar state on `nodes` nodes of a unit bar.
pub fn manufactured_bar(cfg: &BarConfig) -> BarState {
    let x = cfg.node_positions();
    let l = cfg.length;
    let mut s = BarState {
        u: x.iter().map(|x| 0.01 * (PI * x / l).sin() * (1.0 + 0.5 * x / l)).collect(),
        w: x.iter().map(|x| 0.1 * (2.0 * PI * x / l).sin() + 0.05 * (PI * x / l).sin()).collect(),
        t: 0.0,
    };
    let last = cfg.nodes - 1;
    for v in [&mut s.u, &mut s.w] {
        v[0] = 0.0;
        v[last] = 0.0;
    }
    s
}

pub fn el_bar_config(nodes: usize, density: DensityLaw) -> BarConfig {
    BarConfig::new(nodes, 1.0, density, 1e4, 3.0, DEFAULT_DELTA).expect("reference bar is valid")
}

/// `‖EL residual at a = momentum_rhs‖∞ / ‖∂σ/∂x‖∞` on the manufactured state.
pub fn el_residual_norm(cfg: &BarConfig) -> Result<f64, continuum1d::BarError> {
    let s = manufactured_bar(cfg);
    let terms = momentum_terms(&s, cfg)?;
    let r = discrete_lagrangian_residual(&s, &terms.accel, cfg)?;
    let scale = terms.stress_divergence.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(r.iter().map(|x| x.abs()).fold(0.0, f64::max) / scale)
}

fn observed_orders(errors: &[f64]) -> f64 {
    errors.windows(2).map(|e| (e[0] / e[1]).log2()).fold(f64::INFINITY, f64::min)
}

pub const EL_NODES: [usize; 3] = [51, 101, 201];
/// Relative residual treated as exact agreement.
pub const EL_ROUNDOFF: f64 = 1e-12;

fn el_pde_suite() -> Vec<Check> {
    let mut checks = Vec::new();
    let norms = |density: DensityLaw| -> Result<Vec<f64>, continuum1d::BarError> {
        EL_NODES.iter().map(|&n| el_residual_norm(&el_bar_config(n, density))).collect()
    };
    // For the linear law the cell-averaged density equals the nodal density,
    // so the two forms agree identically and only round-off remains.
    let name = "linear law β = 5: max ‖EL residual‖∞ / ‖∂σ/∂x‖∞, N ∈ {51, 101, 201}";
    checks.push(match norms(DensityLaw::Linear { rho0: 1000.0, beta: 5.0 }) {
        Ok(n) => Check::at_most(name, EL_RELATION, n.iter().copied().fold(0.0, f64::max), EL_ROUNDOFF)
            .with_note(format!("relative residuals {n:?}")),
        Err(e) => Check::errored(name, EL_RELATION, EL_ROUNDOFF, e),
    });
    let name = "exponential law β = 5: observed order of ‖EL residual‖∞, N ∈ {51, 101, 201}";
    checks.push(match norms(DensityLaw::Exponential { rho0: 1000.0, beta: 5.0 }) {
        Ok(n) => Check::at_least(name, EL_RELATION, observed_orders(&n), MIN_ORDER)
            .with_note(format!("relative residuals {n:?}")),
        Err(e) => Check::errored(name, EL_RELATION, MIN_ORDER, e),
    });
    let mut extra: f64 = 0.0;
    for n in EL_NODES {
        let cfg = el_bar_config(n, DensityLaw::Linear { rho0: 1000.0, beta: 0.0 });
        match momentum_terms(&manufactured_bar(&cfg), &cfg) {
            Ok(t) => {
                for (r, g) in t.rate_term.iter().zip(&t.gradient_term) {
                    extra = extra.max(r.abs()).max(g.abs());
                }
            }
            Err(e) => {
                checks.push(Check::errored("β = 0: density-rate terms", EL_RELATION, 0.0, e));
                return checks;
            }
        }
    }
    checks.push(Check::at_most("β = 0: max |ρ'ε̇u̇|, |½∂x(u̇²ρ')|", EL_RELATION, extra, 0.0));
    checks
}

pub const MASS_NODES: [usize; 3] = [26, 51, 101];

pub fn mass_bar_config(nodes: usize, beta: f64) -> BarConfig {
    BarConfig::new(nodes, 1.0, DensityLaw::Linear { rho0: 1000.0, beta }, 10.0, 2.0, DEFAULT_DELTA)
        .expect("reference bar is valid")
}

/// Mass defect of a run on `nodes` nodes with sample spacing `1.25·dx` and
/// five RK4 steps per sample, from `w = 0.02 sin(πx)` over `t ∈ [0, 0.5]`.
pub fn mass_defect_run(nodes: usize, beta: f64) -> Result<continuum1d::MassAuditReport, continuum1d::BarError> {
    let cfg = mass_bar_config(nodes, beta);
    let x = cfg.node_positions();
    let mut s0 = BarState::zero(&cfg);
    for i in 1..nodes - 1 {
        s0.w[i] = 0.02 * (PI * x[i]).sin();
    }
    let sample = 1.25 * cfg.dx();
    let tr = integrate_bar(&s0, 0.5, &cfg, &BarOptions { dt: sample / 5.0, stride: 5 })?;
    if let Some(f) = tr.failure {
        return Err(f.error);
    }
    mass_audit(&tr.states, &cfg)
}

fn mass_audit_suite() -> Vec<Check> {
    let mut checks = Vec::new();
    let defects: Result<Vec<f64>, _> = MASS_NODES.iter().map(|&n| mass_defect_run(n, 5.0).map(|r| r.max_defect)).collect();
    checks.push(match defects {
        Ok(d) => Check::at_least("β = 5: observed order of the mass defect under joint dt, dx refinement", MASS_RELATION, observed_orders(&d), MIN_ORDER)
            .with_note(format!("defects {d:?}")),
        Err(e) => Check::errored("β = 5: mass defect", MASS_RELATION, MIN_ORDER, e),
    });
    let name = "β = 0: max |M − M0| / M0";
    checks.push(match mass_defect_run(51, 0.0) {
        Ok(r) => Check::at_most(name, MASS_RELATION, r.max_mass_drift / r.mass[0], f64::EPSILON),
        Err(e) => Check::errored(name, MASS_RELATION, f64::EPSILON, e),
    });
    checks
}

// -------------------------------------------------------------- ad/fd

/// Derivative blocks `(∂/∂x, ∂/∂v, ∂²/∂v², ∂²/∂v∂x)` by central
/// differences: first derivatives from values, Hessian blocks from the
/// forward-mode gradient in `v`.
pub fn fd_blocks(f: &ScalarField, s: &State, h: f64) -> Result<[Vec<f64>; 4], autodiff::AdError> {
    let (nx, nv) = (s.x.len(), f.arity().n_v);
    let n_rates = s.v.len();
    let shifted = |dx: &[f64], dv: &[f64]| State {
        x: s.x.iter().zip(dx).map(|(a, b)| a + b).collect(),
        v: s.v.iter().zip(dv).map(|(a, b)| a + b).collect(),
        t: s.t,
    };
    let unit = |n: usize, i: usize, c: f64| (0..n).map(|j| if i == j { c } else { 0.0 }).collect::<Vec<_>>();
    let (zx, zv) = (vec![0.0; nx], vec![0.0; n_rates]);
    let mut gx = Vec::with_capacity(nx);
    let mut hvx = vec![0.0; nv * nx];
    for i in 0..nx {
        let (p, m) = (shifted(&unit(nx, i, h), &zv), shifted(&unit(nx, i, -h), &zv));
        gx.push((autodiff::eval(f, &p)? - autodiff::eval(f, &m)?) / (2.0 * h));
        let (gp, gm) = (autodiff::grad_v(f, &p)?, autodiff::grad_v(f, &m)?);
        for r in 0..nv {
            hvx[r * nx + i] = (gp[r] - gm[r]) / (2.0 * h);
        }
    }
    let mut gv = Vec::with_capacity(nv);
    let mut hvv = vec![0.0; nv * nv];
    for i in 0..nv {
        let (p, m) = (shifted(&zx, &unit(n_rates, i, h)), shifted(&zx, &unit(n_rates, i, -h)));
        gv.push((autodiff::eval(f, &p)? - autodiff::eval(f, &m)?) / (2.0 * h));
        let (gp, gm) = (autodiff::grad_v(f, &p)?, autodiff::grad_v(f, &m)?);
        for r in 0..nv {
            hvv[r * nv + i] = (gp[r] - gm[r]) / (2.0 * h);
        }
    }
    Ok([gx, gv, hvv, hvx])
}

pub fn ad_blocks(f: &ScalarField, s: &State) -> Result<[Vec<f64>; 4], autodiff::AdError> {
    let row_major = |m: nalgebra::DMatrix<f64>| {
        let mut out = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.push(m[(r, c)]);
            }
        }
        out
    };
    Ok([
        autodiff::grad_x(f, s)?,
        autodiff::grad_v(f, s)?,
        row_major(autodiff::hess_vv(f, s)?),
        row_major(autodiff::hess_vx(f, s)?),
    ])
}

/// `‖ad − fd‖∞ / max(‖ad‖∞, 1)` per block, maximized over blocks.
pub fn ad_fd_deviation(f: &ScalarField, s: &State, h: f64) -> Result<f64, autodiff::AdError> {
    let ad = ad_blocks(f, s)?;
    let fd = fd_blocks(f, s, h)?;
    let mut worst: f64 = 0.0;
    for (a, b) in ad.iter().zip(&fd) {
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let scale = a.iter().map(|x| x.abs()).fold(1.0, f64::max);
        worst = worst.max(diff / scale);
    }
    Ok(worst)
}

/// Built-in potentials with the boxes their derivatives are checked on.
pub fn reference_potentials() -> Vec<(String, ScalarField, SampleBox)> {
    let p = REFERENCE_DISK;
    let disk = build_disk_damper(p.m, p.r, p.eta, p.g).expect("reference disk is valid");
    let osc = build_rayleigh_oscillator(2.0, 8.0, 0.3).expect("reference oscillator is valid");
    let disk_box = SampleBox::uniform(1, (-PI, PI), (-10.0, 10.0));
    let osc_box = SampleBox::uniform(1, (-10.0, 10.0), (-10.0, 10.0));
    let mut out = vec![
        ("disk_damper K".into(), disk.kinetic().clone(), disk_box.clone()),
        ("disk_damper G".into(), disk.gibbs().clone(), disk_box.clone()),
        ("disk_damper Q".into(), disk.dissipation().clone(), disk_box),
        ("rayleigh K".into(), osc.kinetic().clone(), osc_box.clone()),
        ("rayleigh G".into(), osc.gibbs().clone(), osc_box.clone()),
        ("rayleigh Q".into(), osc.dissipation().clone(), osc_box),
    ];
    for m in [1.5, 2.0, 3.0] {
        out.push((
            format!("Norton-Hoff Q, m = {m}, n = 3"),
            norton_hoff_dissipation(3, 2.5, m),
            SampleBox::uniform(3, (-1.0, 1.0), (-10.0, 10.0)),
        ));
    }
    out
}

fn ad_vs_fd_suite(seed: u64) -> Vec<Check> {
    reference_potentials()
        .into_iter()
        .map(|(name, f, bx)| {
            let name = format!("{name}: gradients and Hessian blocks, {FD_SAMPLES} states, h = {FD_STEP:e}");
            let mut rng = sampling::seeded(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..FD_SAMPLES {
                let s = draw_state(&bx, &mut rng);
                match ad_fd_deviation(&f, &s, FD_STEP) {
                    Ok(d) => worst = worst.max(d),
                    Err(e) => return Check::errored(name, FD_RELATION, FD_TOL, e),
                }
            }
            Check::at_most(name, FD_RELATION, worst, FD_TOL)
        })
        .collect()
}
