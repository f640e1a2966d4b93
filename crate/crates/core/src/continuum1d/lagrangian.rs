//! Euler-Lagrange residual of the discrete bar Lagrangian.
//!
//! The discrete Lagrangian is assembled cell by cell, independently of the
//! nodal stencils of [`super::momentum_rhs`]:
//!
//! ```text
//! K = Σ_cells dx · ½ ρ(ε_c) · (w_l² + w_r²)/2,      ε_c = (u_r − u_l)/dx
//! W = Σ_cells dx · σ̄_c ε_c,                          σ̄_c = (σ_l + σ_r)/2
//! ```
//!
//! with the nodal stresses `σ` frozen at the current state. The residual at
//! node `i` is `(d/dt ∂K/∂w_i − ∂K/∂u_i + ∂W/∂u_i) / dx`, obtained by
//! forward-mode differentiation of the two cells touching node `i` (the only
//! terms that depend on `u_i`, `w_i`). For constant density it coincides with
//! the nodal balance; otherwise the two differ by `O(dx²)`.

use crate::autodiff::{self, FieldBody, Scalar, ScalarField};
use crate::dynamics::variational_derivative_k;
use crate::model::State;

use super::{checked_density, strain, stress, BarConfig, BarError, BarState, DensityLaw};

/// Kinetic energy of the two cells around a node; coordinates are
/// `(u_{i−1}, u_i, u_{i+1})`, rates `(w_{i−1}, w_i, w_{i+1})`.
struct PatchKinetic {
    density: DensityLaw,
    dx: f64,
}

impl FieldBody for PatchKinetic {
    fn eval<S: Scalar>(&self, u: &[S], w: &[S], _t: S) -> S {
        let eps_l = (u[1] - u[0]) / self.dx;
        let eps_r = (u[2] - u[1]) / self.dx;
        let left = self.density.rho(eps_l) * (w[0] * w[0] + w[1] * w[1]);
        let right = self.density.rho(eps_r) * (w[1] * w[1] + w[2] * w[2]);
        (left + right) * (0.25 * self.dx)
    }
}

/// Work of the frozen cell stresses on the two cells around a node.
struct PatchWork {
    sigma_l: f64,
    sigma_r: f64,
}

impl FieldBody for PatchWork {
    fn eval<S: Scalar>(&self, u: &[S], _w: &[S], _t: S) -> S {
        (u[1] - u[0]) * self.sigma_l + (u[2] - u[1]) * self.sigma_r
    }
}

/// Per-unit-length Euler-Lagrange residual at every node for the trial
/// accelerations `a`. The fixed end nodes carry no variation and report 0.
pub fn discrete_lagrangian_residual(
    s: &BarState,
    a: &[f64],
    cfg: &BarConfig,
) -> Result<Vec<f64>, BarError> {
    s.check(cfg)?;
    let n = cfg.nodes;
    if a.len() != n {
        return Err(BarError::StateDimension { expected: n, got: a.len() });
    }
    let dx = cfg.dx();
    checked_density(&strain(&s.u, dx), cfg)?;
    let cell_strain: Vec<f64> = s.u.windows(2).map(|p| (p[1] - p[0]) / dx).collect();
    checked_density(&cell_strain, cfg)?;
    let sigma = stress(&strain(&s.w, dx), cfg);

    let kinetic = ScalarField::of_state(3, PatchKinetic { density: cfg.density, dx });
    let mut residual = vec![0.0; n];
    for i in 1..n - 1 {
        let local = State {
            x: s.u[i - 1..=i + 1].to_vec(),
            v: s.w[i - 1..=i + 1].to_vec(),
            t: s.t,
        };
        let inertial = variational_derivative_k(&kinetic, &local, &a[i - 1..=i + 1])
            .expect("patch dimensions are fixed at 3");
        let work = ScalarField::of_coordinates(
            3,
            PatchWork {
                sigma_l: 0.5 * (sigma[i - 1] + sigma[i]),
                sigma_r: 0.5 * (sigma[i] + sigma[i + 1]),
            },
        );
        let work_grad = autodiff::grad_x(&work, &local)?;
        residual[i] = (inertial[1] + work_grad[1]) / dx;
    }
    Ok(residual)
}
