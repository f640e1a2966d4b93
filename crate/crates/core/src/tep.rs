//! Dissipative force from a dissipation function by maximizing dissipation
//! under the power constraint `q·v = Q`.
//!
//! The maximizer is
//!
//! ```text
//! q = Q / (∂Q/∂v · v) · ∂Q/∂v
//! ```
//!
//! which satisfies `q·v = Q` identically wherever the denominator is regular.
//! For `Q` homogeneous of degree `d` in `v` the denominator is `d·Q` (Euler's
//! relation) and the force reduces to `∂Q/∂v / d`.

use serde::Serialize;
use thiserror::Error;

use crate::autodiff::{self, AdError, ScalarField};
use crate::model::State;

/// Relative size below which `∂Q/∂v·v` is treated as zero.
pub const DENOMINATOR_EPS: f64 = 1e-14;
/// `‖v‖ < QUIESCENT_RATE·(1 + ‖x‖)` counts as rest.
pub const QUIESCENT_RATE: f64 = 1e-12;
/// Bound on `|q·v − Q| / (1 + |Q|)`.
pub const POWER_IDENTITY_TOL: f64 = 1e-12;
/// Relative spread tolerated when testing homogeneity under `v → λv`.
pub const HOMOGENEITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TepError {
    #[error(
        "singular dissipation at x = {x:?}, v = {v:?}: Q = {dissipation:e} but ∂Q/∂v·v = {denominator:e}"
    )]
    SingularDissipation { x: Vec<f64>, v: Vec<f64>, dissipation: f64, denominator: f64 },
    #[error("power identity needs at least one sample state")]
    EmptySampleSet,
    #[error(transparent)]
    Ad(#[from] AdError),
}

/// Generalized dissipative force and the power it delivers.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipativeForce {
    pub q: Vec<f64>,
    pub power: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dissipative_force(q_field: &ScalarField, s: &State) -> Result<DissipativeForce, TepError> {
    let quiet = DissipativeForce { q: vec![0.0; s.v.len()], power: 0.0 };
    let vnorm = norm(&s.v);
    if vnorm < QUIESCENT_RATE * (1.0 + norm(&s.x)) {
        return Ok(quiet);
    }
    let dissipation = autodiff::eval(q_field, s)?;
    let grad = autodiff::grad_v(q_field, s)?;
    let denominator = dot(&grad, &s.v);
    if denominator.abs() <= DENOMINATOR_EPS * (1.0 + dissipation.abs()) {
        if dissipation <= DENOMINATOR_EPS * (1.0 + vnorm * vnorm) {
            return Ok(quiet);
        }
        return Err(TepError::SingularDissipation {
            x: s.x.clone(),
            v: s.v.clone(),
            dissipation,
            denominator,
        });
    }
    let scale = dissipation / denominator;
    let q: Vec<f64> = grad.iter().map(|g| scale * g).collect();
    let power = dot(&q, &s.v);
    Ok(DissipativeForce { q, power })
}

/// Degree `d` with `Q(x, λv) = λ^d Q(x, v)`, estimated from Euler's relation
/// at `λ ∈ {1, ½, 2}`. `None` when `Q` vanishes at `s` or the three estimates
/// disagree.
pub fn homogeneity_degree(q_field: &ScalarField, s: &State) -> Result<Option<f64>, AdError> {
    let euler_ratio = |lambda: f64| -> Result<Option<f64>, AdError> {
        let scaled = State { x: s.x.clone(), v: s.v.iter().map(|c| lambda * c).collect(), t: s.t };
        let value = autodiff::eval(q_field, &scaled)?;
        if value == 0.0 {
            return Ok(None);
        }
        let grad = autodiff::grad_v(q_field, &scaled)?;
        Ok(Some(dot(&grad, &scaled.v) / value))
    };
    let Some(degree) = euler_ratio(1.0)? else {
        return Ok(None);
    };
    for lambda in [0.5, 2.0] {
        match euler_ratio(lambda)? {
            Some(d) if (d - degree).abs() <= HOMOGENEITY_TOL * degree.abs().max(1.0) => {}
            _ => return Ok(None),
        }
    }
    Ok(Some(degree))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerIdentityReport {
    pub samples: usize,
    pub max_deviation: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Largest `|q·v − Q| / (1 + |Q|)` over `states`.
pub fn verify_power_identity(
    q_field: &ScalarField,
    states: &[State],
) -> Result<PowerIdentityReport, TepError> {
    if states.is_empty() {
        return Err(TepError::EmptySampleSet);
    }
    let mut max_deviation: f64 = 0.0;
    for s in states {
        let force = dissipative_force(q_field, s)?;
        let dissipation = autodiff::eval(q_field, s)?;
        let dev = (force.power - dissipation).abs() / (1.0 + dissipation.abs());
        max_deviation = max_deviation.max(dev);
    }
    Ok(PowerIdentityReport {
        samples: states.len(),
        max_deviation,
        threshold: POWER_IDENTITY_TOL,
        passed: max_deviation <= POWER_IDENTITY_TOL,
    })
}
