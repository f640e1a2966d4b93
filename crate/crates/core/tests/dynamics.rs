use std::f64::consts::PI;

use tepdyn::autodiff::{FieldBody, Scalar, ScalarField};
use tepdyn::cli::verify::energy_audit;
use tepdyn::dynamics::{self, integrate, DynamicsError, IntegrateOptions};
use tepdyn::model::{build_disk_damper, build_rayleigh_oscillator, norton_hoff_dissipation, State, SystemModel};

fn st(x: f64, v: f64) -> State {
    State::new(vec![x], vec![v], 0.0).unwrap()
}

fn damped(t: f64, eta: f64) -> f64 {
    // m = k = 1, x0 = 1, v0 = 0
    let zeta = eta / 2.0;
    let wd = (1.0 - zeta * zeta).sqrt();
    (-zeta * t).exp() * ((wd * t).cos() + zeta / wd * (wd * t).sin())
}

#[test]
fn adaptive_integrator_tracks_damped_oscillator() {
    let model = build_rayleigh_oscillator(1.0, 1.0, 0.2).unwrap();
    let tr = integrate(&model, &st(1.0, 0.0), 20.0, &IntegrateOptions::rkf45(1e-11, 1e-11)).unwrap();
    assert!(tr.completed());
    assert_eq!(*tr.times.last().unwrap(), 20.0);
    let worst = tr.times.iter().zip(&tr.states).map(|(t, s)| (s.x[0] - damped(*t, 0.2)).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn rk4_error_shrinks_at_fourth_order() {
    let model = build_rayleigh_oscillator(1.0, 1.0, 0.2).unwrap();
    let err = |dt: f64| {
        let tr = integrate(&model, &st(1.0, 0.0), 5.0, &IntegrateOptions::rk4(dt)).unwrap();
        (tr.final_state().unwrap().x[0] - damped(5.0, 0.2)).abs()
    };
    let order = (err(0.1) / err(0.05)).log2();
    assert!(order > 3.8 && order < 4.3, "order {order}");
}

#[test]
fn disk_energy_balance_before_the_degenerate_angle() {
    let model = build_disk_damper(1.0, 1.0, 0.7, 9.81).unwrap();
    let audit = energy_audit(&model, &st(0.0, 0.0), 0.5, 1e-3).unwrap();
    assert!(audit.completed);
    assert!(audit.energy_change < 0.0);
    assert!(audit.max_rise <= 0.0);
    assert!(audit.balance < 1e-6, "{:e}", audit.balance);
}

#[test]
fn disk_from_rest_stops_with_a_failure_marker() {
    let model = build_disk_damper(1.0, 1.0, 0.7, 9.81).unwrap();
    let tr = integrate(&model, &st(0.0, 0.0), 10.0, &IntegrateOptions::rk4(1e-3)).unwrap();
    let failure = tr.failure.as_ref().expect("the path reaches φ = −π/2");
    assert!(failure.t > 0.5 && failure.t < 2.0);
    assert!(failure.last_state.x[0] < -1.3);
    assert!(matches!(failure.error, DynamicsError::Unstable { .. } | DynamicsError::DegenerateMass { .. }));
    assert_eq!(tr.times.len(), tr.energy.len());
}

#[test]
fn equilibrium_is_a_fixed_point() {
    let model = build_rayleigh_oscillator(1.0, 3.0, 0.5).unwrap();
    let tr = integrate(&model, &st(0.0, 0.0), 2.0, &IntegrateOptions::rk4(0.01)).unwrap();
    assert!(tr.states.iter().all(|s| s.x[0] == 0.0 && s.v[0] == 0.0));
    assert!(tr.diss_power.iter().all(|&q| q == 0.0));
}

struct Free;
impl FieldBody for Free {
    fn eval<S: Scalar>(&self, _x: &[S], v: &[S], _t: S) -> S {
        (v[0] * v[0] + v[1] * v[1]) * 0.5
    }
}

struct Flat;
impl FieldBody for Flat {
    fn eval<S: Scalar>(&self, _x: &[S], _v: &[S], _t: S) -> S {
        S::zero()
    }
}

#[test]
fn planar_norton_hoff_drag_decays_along_a_ray() {
    // K = ½|v|², Q = α|v|^m: the speed obeys ṡ = −α s^(m−1) and the heading is fixed.
    let (alpha, m) = (0.8, 3.0);
    let model = SystemModel::new(
        vec!["x".into(), "y".into()],
        ScalarField::of_state(2, Free),
        ScalarField::of_coordinates(2, Flat),
        norton_hoff_dissipation(2, alpha, m),
    )
    .unwrap();
    let s0 = State::new(vec![0.0, 0.0], vec![3.0, 4.0], 0.0).unwrap();
    let tr = integrate(&model, &s0, 2.0, &IntegrateOptions::rk4(1e-3)).unwrap();
    for (t, s) in tr.times.iter().zip(&tr.states) {
        // m = 3: 1/s = 1/s0 + αt
        let speed = 1.0 / (1.0 / 5.0 + alpha * t);
        let got = s.v[0].hypot(s.v[1]);
        assert!((got - speed).abs() < 1e-9 * speed.max(1.0), "t = {t}: {got} vs {speed}");
        assert!((s.v[1] / s.v[0] - 4.0 / 3.0).abs() < 1e-12);
    }
    let e0 = tr.energy[0];
    let e1 = *tr.energy.last().unwrap();
    assert!(((e0 - e1) - tr.dissipated_energy()).abs() < 1e-8 * e0);
}

#[test]
fn residual_vanishes_at_the_solved_acceleration() {
    let model = build_disk_damper(2.0, 0.5, 0.3, 9.81).unwrap();
    for phi in [-3.0, -1.0, 0.2, 1.5, PI - 0.1] {
        let s = st(phi, 2.5);
        let a = dynamics::solve_acceleration(&model, &s).unwrap();
        let r = dynamics::residual(&model, &s, &a).unwrap();
        let scale = r.d_k[0].abs() + r.grad_g[0].abs() + r.q[0].abs();
        assert!(r.residual[0].abs() < 1e-12 * scale.max(1.0));
    }
}
