//! The force balance `D_K + ∂G/∂x + q = 0` and its time integration.
//!
//! `D_K = d/dt ∂K/∂v − ∂K/∂x` is expanded by the chain rule into
//! `∂²K/∂v² · a + ∂²K/∂v∂x · v − ∂K/∂x`. The dissipative force `q` depends on
//! `(x, v)` only, so the balance is linear in the acceleration `a` and is
//! solved with one symmetric positive-definite solve per evaluation.

mod integrate;

pub use integrate::{integrate, IntegrateOptions, IntegrationFailure, Method, Trajectory};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::autodiff::{self, AdError, ScalarField};
use crate::model::{ModelError, State, SystemModel};
use crate::tep::{self, TepError};

/// Mass matrix is rejected when `λ_min < MASS_CONDITION · λ_max`.
pub const MASS_CONDITION: f64 = 1e-10;
/// Acceptance bound of the post-solve residual, relative to `1 + ‖rhs‖`.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("degenerate mass matrix at x = {x:?}, v = {v:?}, t = {t}: eigenvalues in [{min_eigenvalue:e}, {max_eigenvalue:e}]", x = state.x, v = state.v, t = state.t)]
    DegenerateMass { state: State, min_eigenvalue: f64, max_eigenvalue: f64 },
    #[error("acceleration solve left residual {residual:e} above {bound:e}")]
    Unbalanced { residual: f64, bound: f64 },
    #[error("step size {step:e} underflowed at t = {t}; the problem is too stiff for the chosen tolerances")]
    StepUnderflow { t: f64, step: f64 },
    #[error("integration became unstable at t = {t}")]
    Unstable { t: f64 },
    #[error("invalid integrator options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Dissipation(#[from] TepError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ad(#[from] AdError),
}

/// The four force terms of the balance at one state and acceleration.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceDecomposition {
    pub d_k: Vec<f64>,
    pub grad_g: Vec<f64>,
    pub q: Vec<f64>,
    pub residual: Vec<f64>,
}

/// `d/dt ∂K/∂v − ∂K/∂x` along the motion with acceleration `a`.
pub fn variational_derivative_k(
    kinetic: &ScalarField,
    s: &State,
    a: &[f64],
) -> Result<Vec<f64>, DynamicsError> {
    if a.len() != s.v.len() {
        return Err(AdError::DimensionMismatch {
            n_x: s.x.len(),
            n_v: s.v.len(),
            got_x: s.x.len(),
            got_v: a.len(),
        }
        .into());
    }
    let hvv = autodiff::hess_vv(kinetic, s)?;
    let hvx = autodiff::hess_vx(kinetic, s)?;
    let gx = autodiff::grad_x(kinetic, s)?;
    let inertial = hvv * DVector::from_column_slice(a) + hvx * DVector::from_column_slice(&s.v);
    Ok(inertial.iter().zip(&gx).map(|(i, g)| i - g).collect())
}

pub fn residual(model: &SystemModel, s: &State, a: &[f64]) -> Result<ForceDecomposition, DynamicsError> {
    model.check_state(s)?;
    let d_k = variational_derivative_k(model.kinetic(), s, a)?;
    let grad_g = autodiff::grad_x(model.gibbs(), s)?;
    let q = tep::dissipative_force(model.dissipation(), s)?.q;
    let residual = (0..model.n()).map(|i| d_k[i] + grad_g[i] + q[i]).collect();
    Ok(ForceDecomposition { d_k, grad_g, q, residual })
}

/// Everything the balance needs at `s`, except the acceleration.
struct Assembly {
    mass: DMatrix<f64>,
    /// `∂K/∂x − ∂²K/∂v∂x · v − ∂G/∂x − q`
    rhs: DVector<f64>,
}

fn assemble(model: &SystemModel, s: &State) -> Result<Assembly, DynamicsError> {
    model.check_state(s)?;
    let k = model.kinetic();
    let mass = autodiff::hess_vv(k, s)?;
    let hvx = autodiff::hess_vx(k, s)?;
    let gx = DVector::from_vec(autodiff::grad_x(k, s)?);
    let gg = DVector::from_vec(autodiff::grad_x(model.gibbs(), s)?);
    let q = DVector::from_vec(tep::dissipative_force(model.dissipation(), s)?.q);
    let rhs = gx - hvx * DVector::from_column_slice(&s.v) - gg - q;
    Ok(Assembly { mass, rhs })
}

fn solve_with_floor(model: &SystemModel, s: &State, mass_floor: f64) -> Result<Vec<f64>, DynamicsError> {
    let Assembly { mass, rhs } = assemble(model, s)?;
    if !mass.iter().chain(rhs.iter()).all(|c| c.is_finite()) {
        return Err(DynamicsError::Unstable { t: s.t });
    }
    let eig = SymmetricEigen::new(mass.clone()).eigenvalues;
    let min_eigenvalue = eig.min();
    let max_eigenvalue = eig.max();
    let scale = max_eigenvalue.max(mass_floor);
    if !(min_eigenvalue > 0.0) || min_eigenvalue < MASS_CONDITION * scale {
        return Err(DynamicsError::DegenerateMass { state: s.clone(), min_eigenvalue, max_eigenvalue });
    }
    let chol = mass.clone().cholesky().ok_or_else(|| DynamicsError::DegenerateMass {
        state: s.clone(),
        min_eigenvalue,
        max_eigenvalue,
    })?;
    let a = chol.solve(&rhs);
    let residual = (&mass * &a - &rhs).amax();
    let bound = SOLVE_RESIDUAL_TOL * (1.0 + rhs.norm());
    if !(residual <= bound) {
        return Err(DynamicsError::Unbalanced { residual, bound });
    }
    Ok(a.iter().copied().collect())
}

/// Acceleration satisfying the force balance at `s`.
///
/// Fails with [`DynamicsError::DegenerateMass`] when `∂²K/∂v²` is not
/// positive definite or its condition exceeds `1 / MASS_CONDITION`.
pub fn solve_acceleration(model: &SystemModel, s: &State) -> Result<Vec<f64>, DynamicsError> {
    solve_with_floor(model, s, 0.0)
}

/// `E = v·∂K/∂v − K + G`.
pub fn legendre_energy(model: &SystemModel, s: &State) -> Result<f64, DynamicsError> {
    model.check_state(s)?;
    let k = model.kinetic();
    let p = autodiff::grad_v(k, s)?;
    let vp: f64 = p.iter().zip(&s.v).map(|(a, b)| a * b).sum();
    Ok(vp - autodiff::eval(k, s)? + autodiff::eval(model.gibbs(), s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_disk_damper, build_rayleigh_oscillator};
    use std::f64::consts::FRAC_PI_2;

    fn st(x: f64, v: f64) -> State {
        State::new(vec![x], vec![v], 0.0).unwrap()
    }

    #[test]
    fn variational_derivative_of_disk_kinetic_energy() {
        let m = build_disk_damper(1.0, 1.0, 0.7, 9.81).unwrap();
        let dk = variational_derivative_k(m.kinetic(), &st(0.0, 1.0), &[1.0]).unwrap();
        assert!((dk[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn newtonian_kinetic_energy_gives_mass_times_acceleration() {
        let m = build_rayleigh_oscillator(2.5, 1.0, 0.0).unwrap();
        let dk = variational_derivative_k(m.kinetic(), &st(0.4, -1.0), &[3.0]).unwrap();
        assert!((dk[0] - 7.5).abs() < 1e-14);
    }

    #[test]
    fn rayleigh_residual_is_classical_operator() {
        let (mass, k, eta) = (2.0, 8.0, 0.3);
        let m = build_rayleigh_oscillator(mass, k, eta).unwrap();
        let (x, v, a) = (0.7, -1.1, 2.3);
        let r = residual(&m, &st(x, v), &[a]).unwrap();
        let expected = mass * a + eta * v + k * x;
        assert!((r.residual[0] - expected).abs() < 1e-13);
        assert!((r.q[0] - eta * v).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_has_zero_residual() {
        let m = build_rayleigh_oscillator(1.0, 3.0, 0.0).unwrap();
        let r = residual(&m, &st(0.0, 0.0), &[0.0]).unwrap();
        assert_eq!(r.residual, vec![0.0]);
    }

    #[test]
    fn solve_examples() {
        let disk = build_disk_damper(1.0, 1.0, 0.7, 9.81).unwrap();
        let a = solve_acceleration(&disk, &st(0.0, 0.0)).unwrap();
        assert!((a[0] + 4.905).abs() < 1e-14);

        let osc = build_rayleigh_oscillator(2.0, 8.0, 0.0).unwrap();
        let a = solve_acceleration(&osc, &st(1.0, 0.0)).unwrap();
        assert!((a[0] + 4.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_mass_at_bottom() {
        let disk = build_disk_damper(1.0, 1.0, 0.7, 9.81).unwrap();
        let err = solve_acceleration(&disk, &st(-FRAC_PI_2, 0.3)).unwrap_err();
        match err {
            DynamicsError::DegenerateMass { state, .. } => assert_eq!(state.x, vec![-FRAC_PI_2]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn legendre_energy_examples() {
        let disk = build_disk_damper(1.0, 1.0, 0.7, 9.81).unwrap();
        let (phi, w) = (0.4_f64, -1.3_f64);
        let e = legendre_energy(&disk, &st(phi, w)).unwrap();
        let expected = (1.0 + phi.sin()) * w * w + 9.81 * phi.sin();
        assert!((e - expected).abs() < 1e-13);
        let e0 = legendre_energy(&disk, &st(phi, 0.0)).unwrap();
        assert!((e0 - 9.81 * phi.sin()).abs() < 1e-14);

        let osc = build_rayleigh_oscillator(2.0, 8.0, 0.1).unwrap();
        let e = legendre_energy(&osc, &st(0.5, 1.5)).unwrap();
        assert!((e - (0.5 * 2.0 * 2.25 + 0.5 * 8.0 * 0.25)).abs() < 1e-14);
    }
}
