use proptest::prelude::*;

use tepdyn::autodiff::{self, Arity, Dual2, FieldBody, Scalar, ScalarField};
use tepdyn::cli::verify::ad_fd_deviation;
use tepdyn::model::State;

/// Random smooth field over two coordinates and two rates, with time.
#[derive(Clone, Debug)]
struct Mixture {
    c: [f64; 6],
}

impl FieldBody for Mixture {
    fn eval<S: Scalar>(&self, x: &[S], v: &[S], t: S) -> S {
        let c = &self.c;
        x[0] * x[0] * v[0] * c[0]
            + x[1].sin() * v[1] * v[1] * c[1]
            + (x[0] * v[1] * 0.1).exp() * c[2]
            + v[0] * v[1] * x[1] * c[3]
            + (v[0] * v[0] + 1.0).powf(1.5) * c[4]
            + (x[1] * t).cos() * v[0] * c[5]
    }
}

fn field(c: [f64; 6]) -> ScalarField {
    ScalarField::new(Arity { n_x: 2, n_v: 2, has_time: true }, Mixture { c })
}

fn coeffs() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-3.0..3.0f64)
}

fn state() -> impl Strategy<Value = State> {
    (prop::array::uniform2(-2.0..2.0f64), prop::array::uniform2(-2.0..2.0f64), 0.0..3.0f64)
        .prop_map(|(x, v, t)| State::new(x.to_vec(), v.to_vec(), t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn derivatives_match_central_differences(c in coeffs(), s in state()) {
        let d = ad_fd_deviation(&field(c), &s, 1e-6).unwrap();
        prop_assert!(d <= 1e-6, "deviation {d:e}");
    }

    #[test]
    fn rate_hessian_is_symmetric(c in coeffs(), s in state()) {
        let h = autodiff::hess_vv(&field(c), &s).unwrap();
        prop_assert_eq!(h[(0, 1)], h[(1, 0)]);
    }

    #[test]
    fn time_partial_matches_difference(c in coeffs(), s in state()) {
        let f = field(c);
        let h = 1e-6;
        let at = |t: f64| autodiff::eval(&f, &State { t, ..s.clone() }).unwrap();
        let fd = (at(s.t + h) - at(s.t - h)) / (2.0 * h);
        let ad = autodiff::time_partial(&f, &s).unwrap();
        prop_assert!((ad - fd).abs() <= 1e-6 * ad.abs().max(1.0));
    }

    #[test]
    fn dual_exp_ln_round_trip(x in 0.1..10.0f64, seed in -2.0..2.0f64) {
        let d = Dual2::variable(x, seed).ln().exp();
        prop_assert!((d.value - x).abs() <= 1e-14 * x);
        prop_assert!((d.deriv - seed).abs() <= 1e-13);
        prop_assert!(d.deriv2.abs() <= 1e-12);
    }
}

#[test]
fn directional_second_derivative_of_cubic() {
    struct Cube;
    impl FieldBody for Cube {
        fn eval<S: Scalar>(&self, x: &[S], _v: &[S], _t: S) -> S {
            x[0] * x[0] * x[0]
        }
    }
    let f = ScalarField::of_coordinates(1, Cube);
    let s = State::new(vec![2.0], vec![], 0.0).unwrap();
    let d = autodiff::directional(&f, &s, &[1.0], &[], 0.0).unwrap();
    assert_eq!((d.value, d.deriv, d.deriv2), (8.0, 12.0, 12.0));
}
