//! One-dimensional viscous Norton-Hoff bar whose density depends on the
//! volumetric strain, discretized by the method of lines.
//!
//! With `ε = ∂u/∂x`, `σ = α‖ε̇‖^(m−2) ε̇` and `ρ = ρ(ε)`, the momentum
//! balance derived from the Lagrangian `½∫ρ(ε)u̇² − ∫σε` (σ frozen under
//! variation) reads
//!
//! ```text
//! ρ(ε) ü = ∂σ/∂x − ρ'(ε) ε̇ u̇ − ½ ∂/∂x (u̇² ρ'(ε))
//! ```
//!
//! The last two terms come from the strain dependence of the density and
//! vanish for constant density. Both ends are fixed.

mod integrate;
mod lagrangian;

pub use integrate::{integrate_bar, mass_audit, BarFailure, BarOptions, BarTrajectory, MassAuditReport};
pub use lagrangian::discrete_lagrangian_residual;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AdError, Dual2, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BarError {
    #[error("invalid bar configuration: {0}")]
    InvalidConfig(String),
    #[error("bar state has {got} nodes, configuration has {expected}")]
    StateDimension { expected: usize, got: usize },
    #[error("fixed end node {node} has u = {u}, w = {w}")]
    BoundaryViolation { node: usize, u: f64, w: f64 },
    #[error("density collapsed to {density:e} at node {node}")]
    DensityCollapse { node: usize, density: f64 },
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("bar integration became unstable at t = {t} (growth {growth:e})")]
    Unstable { t: f64, growth: f64 },
    #[error("mass audit needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Ad(#[from] AdError),
}

/// `ρ(ε)` for the mass-exchanging medium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensityLaw {
    /// `ρ₀(1 + βε)`
    Linear { rho0: f64, beta: f64 },
    /// `ρ₀ exp(βε)`
    Exponential { rho0: f64, beta: f64 },
}

impl DensityLaw {
    pub fn rho<S: Scalar>(&self, eps: S) -> S {
        match *self {
            Self::Linear { rho0, beta } => (eps * beta + 1.0) * rho0,
            Self::Exponential { rho0, beta } => (eps * beta).exp() * rho0,
        }
    }

    pub fn rho_prime(&self, eps: f64) -> f64 {
        match *self {
            Self::Linear { rho0, beta } => rho0 * beta,
            Self::Exponential { rho0, beta } => beta * rho0 * (beta * eps).exp(),
        }
    }

    pub fn rho0(&self) -> f64 {
        match *self {
            Self::Linear { rho0, .. } | Self::Exponential { rho0, .. } => rho0,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Self::Linear { beta, .. } | Self::Exponential { beta, .. } => beta,
        }
    }
}

/// Default rate regularization of the Norton-Hoff stress.
pub const DEFAULT_DELTA: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarConfig {
    pub nodes: usize,
    pub length: f64,
    pub density: DensityLaw,
    /// Norton-Hoff modulus.
    pub alpha: f64,
    /// Norton-Hoff exponent, `> 1`.
    pub m_exp: f64,
    /// Rate scale regularizing `‖ε̇‖^(m−2)` at rest.
    pub delta: f64,
}

impl BarConfig {
    pub fn new(
        nodes: usize,
        length: f64,
        density: DensityLaw,
        alpha: f64,
        m_exp: f64,
        delta: f64,
    ) -> Result<Self, BarError> {
        let cfg = Self { nodes, length, density, alpha, m_exp, delta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BarError> {
        let fail = |msg: String| Err(BarError::InvalidConfig(msg));
        if self.nodes < 3 {
            return fail(format!("nodes = {} (need at least 3)", self.nodes));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return fail(format!("length = {} must be positive", self.length));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha = {} must be positive", self.alpha));
        }
        if !(self.m_exp > 1.0 && self.m_exp.is_finite()) {
            return fail(format!("m_exp = {} must exceed 1", self.m_exp));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return fail(format!("delta = {} must be non-negative", self.delta));
        }
        let (rho0, beta) = (self.density.rho0(), self.density.beta());
        if !(rho0 > 0.0 && rho0.is_finite() && beta.is_finite()) {
            return fail(format!("density rho0 = {rho0}, beta = {beta}: rho0 must be positive"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.length / (self.nodes - 1) as f64
    }

    /// Trapezoidal nodal weights; they sum to the bar length.
    pub fn weights(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut w = vec![dx; self.nodes];
        w[0] = 0.5 * dx;
        w[self.nodes - 1] = 0.5 * dx;
        w
    }

    pub fn node_positions(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.nodes).map(|i| i as f64 * dx).collect()
    }
}

/// Nodal displacements `u` and velocities `w = u̇`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarState {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
}

impl BarState {
    pub fn zero(cfg: &BarConfig) -> Self {
        Self { u: vec![0.0; cfg.nodes], w: vec![0.0; cfg.nodes], t: 0.0 }
    }

    pub fn check(&self, cfg: &BarConfig) -> Result<(), BarError> {
        let n = cfg.nodes;
        for len in [self.u.len(), self.w.len()] {
            if len != n {
                return Err(BarError::StateDimension { expected: n, got: len });
            }
        }
        for node in [0, n - 1] {
            if self.u[node] != 0.0 || self.w[node] != 0.0 {
                return Err(BarError::BoundaryViolation { node, u: self.u[node], w: self.w[node] });
            }
        }
        Ok(())
    }
}

/// First derivative on a uniform grid: central differences inside,
/// second-order one-sided differences at the two ends.
pub fn strain(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let mut eps = vec![0.0; n];
    eps[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
    for i in 1..n - 1 {
        eps[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
    }
    eps[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx);
    eps
}

/// Regularized Norton-Hoff stress `α (ε̇² + δ²)^((m−2)/2) ε̇`.
pub fn stress_at<S: Scalar>(rate: S, cfg: &BarConfig) -> S {
    if cfg.m_exp == 2.0 {
        return rate * cfg.alpha;
    }
    (rate * rate + cfg.delta * cfg.delta).powf(0.5 * (cfg.m_exp - 2.0)) * rate * cfg.alpha
}

pub fn stress(rates: &[f64], cfg: &BarConfig) -> Vec<f64> {
    rates.iter().map(|&r| stress_at(r, cfg)).collect()
}

/// `∂σ/∂ε̇`, the tangent viscosity.
pub fn tangent_viscosity(rate: f64, cfg: &BarConfig) -> f64 {
    stress_at(Dual2::variable(rate, 1.0), cfg).deriv
}

/// Term-by-term assembly of the nodal momentum balance.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumTerms {
    pub density: Vec<f64>,
    /// `∂σ/∂x`
    pub stress_divergence: Vec<f64>,
    /// `ρ'(ε) ε̇ w`
    pub rate_term: Vec<f64>,
    /// `½ ∂/∂x (w² ρ'(ε))`
    pub gradient_term: Vec<f64>,
    pub accel: Vec<f64>,
}

pub(crate) fn checked_density(eps: &[f64], cfg: &BarConfig) -> Result<Vec<f64>, BarError> {
    eps.iter()
        .enumerate()
        .map(|(node, &e)| {
            let density = cfg.density.rho(e);
            if density > 0.0 {
                Ok(density)
            } else {
                Err(BarError::DensityCollapse { node, density })
            }
        })
        .collect()
}

pub fn momentum_terms(s: &BarState, cfg: &BarConfig) -> Result<MomentumTerms, BarError> {
    s.check(cfg)?;
    let n = cfg.nodes;
    let dx = cfg.dx();
    let eps = strain(&s.u, dx);
    let eps_rate = strain(&s.w, dx);
    let density = checked_density(&eps, cfg)?;
    let sigma = stress(&eps_rate, cfg);
    let rho_prime: Vec<f64> = eps.iter().map(|&e| cfg.density.rho_prime(e)).collect();

    let stress_divergence = strain(&sigma, dx);
    let rate_term: Vec<f64> = (0..n).map(|i| rho_prime[i] * eps_rate[i] * s.w[i]).collect();
    let flux: Vec<f64> = (0..n).map(|i| s.w[i] * s.w[i] * rho_prime[i]).collect();
    let gradient_term: Vec<f64> = strain(&flux, dx).into_iter().map(|g| 0.5 * g).collect();

    let mut accel = vec![0.0; n];
    for i in 1..n - 1 {
        accel[i] = (stress_divergence[i] - rate_term[i] - gradient_term[i]) / density[i];
    }
    Ok(MomentumTerms { density, stress_divergence, rate_term, gradient_term, accel })
}

/// Nodal accelerations; zero at the fixed ends.
pub fn momentum_rhs(s: &BarState, cfg: &BarConfig) -> Result<Vec<f64>, BarError> {
    Ok(momentum_terms(s, cfg)?.accel)
}
