//! Forward-mode differentiation of scalar potentials.
//!
//! Potentials are written once, generically over [`Scalar`], by implementing
//! [`FieldBody`]. Wrapping a body in a [`ScalarField`] makes it evaluable on
//! plain reals and on [`Dual2`] jets, which is how every derivative used by
//! the force balance is produced: gradients by one seeded pass per
//! coordinate, second-derivative blocks by directional second derivatives
//! combined through polarization.

mod dual;

pub use dual::{Dual2, Scalar};

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::model::State;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdError {
    #[error("state has {got_x} coordinates and {got_v} rates, field expects {n_x} and {n_v}")]
    DimensionMismatch { n_x: usize, n_v: usize, got_x: usize, got_v: usize },
}

/// A scalar function of `(x, v, t)` written against generic arithmetic.
///
/// Implementations must be deterministic and free of side effects; the same
/// body is evaluated on `f64` and on [`Dual2`].
pub trait FieldBody: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, x: &[S], v: &[S], t: S) -> S;
}

/// Which arguments a field depends on. `n_v == 0` marks a rate-independent
/// field (e.g. a Gibbs energy `G(x, t)`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arity {
    pub n_x: usize,
    pub n_v: usize,
    pub has_time: bool,
}

trait ErasedBody: Send + Sync {
    fn eval_real(&self, x: &[f64], v: &[f64], t: f64) -> f64;
    fn eval_dual(&self, x: &[Dual2], v: &[Dual2], t: Dual2) -> Dual2;
}

impl<B: FieldBody> ErasedBody for B {
    fn eval_real(&self, x: &[f64], v: &[f64], t: f64) -> f64 {
        self.eval(x, v, t)
    }

    fn eval_dual(&self, x: &[Dual2], v: &[Dual2], t: Dual2) -> Dual2 {
        self.eval(x, v, t)
    }
}

/// A differentiable scalar field: a [`FieldBody`] together with its arity.
#[derive(Clone)]
pub struct ScalarField {
    arity: Arity,
    body: Arc<dyn ErasedBody>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("arity", &self.arity).finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new<B: FieldBody>(arity: Arity, body: B) -> Self {
        Self { arity, body: Arc::new(body) }
    }

    /// Field of `(x, v)`, both of dimension `n`, without explicit time.
    pub fn of_state<B: FieldBody>(n: usize, body: B) -> Self {
        Self::new(Arity { n_x: n, n_v: n, has_time: false }, body)
    }

    /// Field of `x` only.
    pub fn of_coordinates<B: FieldBody>(n: usize, body: B) -> Self {
        Self::new(Arity { n_x: n, n_v: 0, has_time: false }, body)
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    fn check(&self, s: &State) -> Result<(), AdError> {
        let a = self.arity;
        let v_ok = a.n_v == 0 || s.v.len() == a.n_v;
        if s.x.len() != a.n_x || !v_ok {
            return Err(AdError::DimensionMismatch {
                n_x: a.n_x,
                n_v: a.n_v,
                got_x: s.x.len(),
                got_v: s.v.len(),
            });
        }
        Ok(())
    }

    fn rates<'a>(&self, s: &'a State) -> &'a [f64] {
        if self.arity.n_v == 0 {
            &[]
        } else {
            &s.v
        }
    }

    /// One jet pass along the direction `(dx, dv, dt)`; empty direction slices
    /// mean a zero seed for that block.
    fn jet(&self, s: &State, dx: &[f64], dv: &[f64], dt: f64) -> Dual2 {
        let seed = |vals: &[f64], dir: &[f64]| -> Vec<Dual2> {
            vals.iter()
                .enumerate()
                .map(|(i, &val)| Dual2::variable(val, dir.get(i).copied().unwrap_or(0.0)))
                .collect()
        };
        let x = seed(&s.x, dx);
        let v = seed(self.rates(s), dv);
        let t = Dual2::variable(s.t, dt);
        self.body.eval_dual(&x, &v, t)
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Plain evaluation `f(x, v, t)`.
pub fn eval(f: &ScalarField, s: &State) -> Result<f64, AdError> {
    f.check(s)?;
    Ok(f.body.eval_real(&s.x, f.rates(s), s.t))
}

/// Evaluates on duals with all seeds zero. Used to check that the dual path
/// reproduces plain evaluation.
pub fn eval_dual_unseeded(f: &ScalarField, s: &State) -> Result<Dual2, AdError> {
    f.check(s)?;
    Ok(f.jet(s, &[], &[], 0.0))
}

/// Directional first and second derivative of `f` along `(dx, dv, dt)`.
pub fn directional(
    f: &ScalarField,
    s: &State,
    dx: &[f64],
    dv: &[f64],
    dt: f64,
) -> Result<Dual2, AdError> {
    f.check(s)?;
    Ok(f.jet(s, dx, dv, dt))
}

pub fn grad_x(f: &ScalarField, s: &State) -> Result<Vec<f64>, AdError> {
    f.check(s)?;
    let n = f.arity.n_x;
    Ok((0..n).map(|i| f.jet(s, &unit(n, i), &[], 0.0).deriv).collect())
}

pub fn grad_v(f: &ScalarField, s: &State) -> Result<Vec<f64>, AdError> {
    f.check(s)?;
    let n = f.arity.n_v;
    Ok((0..n).map(|i| f.jet(s, &[], &unit(n, i), 0.0).deriv).collect())
}

/// `∂²f/∂v_i∂v_j`, symmetric by construction.
pub fn hess_vv(f: &ScalarField, s: &State) -> Result<DMatrix<f64>, AdError> {
    f.check(s)?;
    let n = f.arity.n_v;
    let diag: Vec<f64> = (0..n).map(|i| f.jet(s, &[], &unit(n, i), 0.0).deriv2).collect();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = diag[i];
        for j in (i + 1)..n {
            let mut d = unit(n, i);
            d[j] = 1.0;
            let both = f.jet(s, &[], &d, 0.0).deriv2;
            let mixed = 0.5 * (both - diag[i] - diag[j]);
            h[(i, j)] = mixed;
            h[(j, i)] = mixed;
        }
    }
    Ok(h)
}

/// `∂²f/∂v_i∂x_j` (row index over rates, column index over coordinates).
pub fn hess_vx(f: &ScalarField, s: &State) -> Result<DMatrix<f64>, AdError> {
    f.check(s)?;
    let (nx, nv) = (f.arity.n_x, f.arity.n_v);
    let dvv: Vec<f64> = (0..nv).map(|i| f.jet(s, &[], &unit(nv, i), 0.0).deriv2).collect();
    let dxx: Vec<f64> = (0..nx).map(|j| f.jet(s, &unit(nx, j), &[], 0.0).deriv2).collect();
    let mut h = DMatrix::zeros(nv, nx);
    for i in 0..nv {
        for j in 0..nx {
            let both = f.jet(s, &unit(nx, j), &unit(nv, i), 0.0).deriv2;
            h[(i, j)] = 0.5 * (both - dvv[i] - dxx[j]);
        }
    }
    Ok(h)
}

/// `∂f/∂t` at fixed `(x, v)`; zero for time-independent fields.
pub fn time_partial(f: &ScalarField, s: &State) -> Result<f64, AdError> {
    f.check(s)?;
    if !f.arity.has_time {
        return Ok(0.0);
    }
    Ok(f.jet(s, &[], &[], 1.0).deriv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    struct Speed2;
    impl FieldBody for Speed2 {
        fn eval<S: Scalar>(&self, _x: &[S], v: &[S], _t: S) -> S {
            v[0] * v[0]
        }
    }

    struct Product;
    impl FieldBody for Product {
        fn eval<S: Scalar>(&self, x: &[S], _v: &[S], _t: S) -> S {
            x[0] * x[1]
        }
    }

    struct Constant;
    impl FieldBody for Constant {
        fn eval<S: Scalar>(&self, _x: &[S], _v: &[S], _t: S) -> S {
            S::constant(4.2)
        }
    }

    /// m r² (1 + sin φ) φ̇² with m = r = 1.
    struct DiskKinetic;
    impl FieldBody for DiskKinetic {
        fn eval<S: Scalar>(&self, x: &[S], v: &[S], _t: S) -> S {
            (x[0].sin() + 1.0) * v[0] * v[0]
        }
    }

    struct XSinT;
    impl FieldBody for XSinT {
        fn eval<S: Scalar>(&self, x: &[S], _v: &[S], t: S) -> S {
            x[0] * t.sin()
        }
    }

    struct TSquared;
    impl FieldBody for TSquared {
        fn eval<S: Scalar>(&self, _x: &[S], _v: &[S], t: S) -> S {
            t * t
        }
    }

    /// v·A·v/2 for a fixed symmetric A.
    struct Quadratic;
    const A: [[f64; 2]; 2] = [[3.0, -1.5], [-1.5, 2.0]];
    impl FieldBody for Quadratic {
        fn eval<S: Scalar>(&self, _x: &[S], v: &[S], _t: S) -> S {
            let mut acc = S::zero();
            for i in 0..2 {
                for j in 0..2 {
                    acc += v[i] * v[j] * A[i][j];
                }
            }
            acc * 0.5
        }
    }

    fn st(x: &[f64], v: &[f64], t: f64) -> State {
        State::new(x.to_vec(), v.to_vec(), t).unwrap()
    }

    #[test]
    fn eval_examples() {
        let f = ScalarField::of_state(1, Speed2);
        assert_eq!(eval(&f, &st(&[0.3], &[3.0], 0.0)).unwrap(), 9.0);
        let k = ScalarField::of_state(1, DiskKinetic);
        assert_eq!(eval(&k, &st(&[0.0], &[2.0], 0.0)).unwrap(), 4.0);
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        let f = ScalarField::of_state(1, Speed2);
        let err = eval(&f, &st(&[0.0, 1.0], &[1.0, 1.0], 0.0)).unwrap_err();
        assert!(matches!(err, AdError::DimensionMismatch { n_x: 1, got_x: 2, .. }));
    }

    #[test]
    fn grad_x_examples() {
        let p = ScalarField::of_coordinates(2, Product);
        assert_eq!(grad_x(&p, &st(&[2.0, 3.0], &[], 0.0)).unwrap(), vec![3.0, 2.0]);
        let c = ScalarField::of_state(2, Constant);
        assert_eq!(grad_x(&c, &st(&[1.0, 2.0], &[0.5, 0.5], 0.0)).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn grad_v_examples() {
        let k = ScalarField::of_state(1, DiskKinetic);
        let g = grad_v(&k, &st(&[FRAC_PI_2], &[3.0], 0.0)).unwrap();
        assert!((g[0] - 12.0).abs() < 1e-14);
        let p = ScalarField::new(Arity { n_x: 2, n_v: 2, has_time: false }, Product);
        assert_eq!(grad_v(&p, &st(&[1.0, 2.0], &[3.0, 4.0], 0.0)).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn hessian_examples() {
        let k = ScalarField::of_state(1, DiskKinetic);
        let hvv = hess_vv(&k, &st(&[FRAC_PI_2], &[1.7], 0.0)).unwrap();
        assert!((hvv[(0, 0)] - 4.0).abs() < 1e-14);
        let hvx = hess_vx(&k, &st(&[0.0], &[1.0], 0.0)).unwrap();
        assert!((hvx[(0, 0)] - 2.0).abs() < 1e-14);

        let q = ScalarField::of_state(2, Quadratic);
        let h = hess_vv(&q, &st(&[0.0, 0.0], &[0.7, -0.2], 0.0)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - A[i][j]).abs() < 1e-14);
            }
        }
        assert_eq!(h[(0, 1)], h[(1, 0)]);
    }

    #[test]
    fn time_partial_examples() {
        let arity = Arity { n_x: 1, n_v: 0, has_time: true };
        let f = ScalarField::new(arity, XSinT);
        assert!((time_partial(&f, &st(&[5.0], &[], 0.0)).unwrap() - 5.0).abs() < 1e-15);
        let g = ScalarField::new(arity, TSquared);
        assert!((time_partial(&g, &st(&[0.0], &[], 3.0)).unwrap() - 6.0).abs() < 1e-15);
        let k = ScalarField::of_state(1, DiskKinetic);
        assert_eq!(time_partial(&k, &st(&[0.4], &[1.0], 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn unseeded_dual_matches_plain() {
        let k = ScalarField::of_state(1, DiskKinetic);
        let s = st(&[PI / 7.0], &[-2.3], 0.0);
        let d = eval_dual_unseeded(&k, &s).unwrap();
        assert_eq!(d.value, eval(&k, &s).unwrap());
        assert_eq!(d.deriv, 0.0);
        assert_eq!(d.deriv2, 0.0);
    }
}
