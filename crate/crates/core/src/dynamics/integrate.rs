use serde::Serialize;

use crate::autodiff;
use crate::model::{State, SystemModel};
use crate::quadrature;

use super::{legendre_energy, solve_with_floor, DynamicsError};

/// Time stepping scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4 { dt: f64 },
    /// Runge-Kutta-Fehlberg 4(5), error per step `≤ abs_tol + rel_tol·‖y‖∞`.
    Rkf45 { abs_tol: f64, rel_tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegrateOptions {
    pub method: Method,
    /// Record every `stride`-th step (the final state is always recorded).
    pub stride: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { method: Method::Rk4 { dt: 1e-3 }, stride: 1 }
    }
}

impl IntegrateOptions {
    pub fn rk4(dt: f64) -> Self {
        Self { method: Method::Rk4 { dt }, stride: 1 }
    }

    pub fn rkf45(abs_tol: f64, rel_tol: f64) -> Self {
        Self { method: Method::Rkf45 { abs_tol, rel_tol }, stride: 1 }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: &str| Err(DynamicsError::InvalidOptions(msg.into()));
        if self.stride == 0 {
            return bad("stride must be at least 1");
        }
        match self.method {
            Method::Rk4 { dt } if !(dt > 0.0 && dt.is_finite()) => bad("dt must be positive"),
            Method::Rkf45 { abs_tol, rel_tol } if !(abs_tol > 0.0 && rel_tol >= 0.0) => {
                bad("abs_tol must be positive and rel_tol non-negative")
            }
            _ => Ok(()),
        }
    }
}

/// Where and why an integration stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationFailure {
    pub t: f64,
    pub last_state: State,
    pub error: DynamicsError,
}

/// Recorded samples of an integration plus energy diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub accels: Vec<Vec<f64>>,
    /// `E = v·∂K/∂v − K + G`
    pub energy: Vec<f64>,
    /// `Q` along the path.
    pub diss_power: Vec<f64>,
    /// `|Ė + Q|` from central differences of `E` and trapezoidal `∫Q`.
    pub balance_defect: Vec<f64>,
    pub failure: Option<IntegrationFailure>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_state(&self) -> Option<&State> {
        self.states.last()
    }

    /// `∫Q dt` over the recorded samples (composite Simpson).
    pub fn dissipated_energy(&self) -> f64 {
        quadrature::simpson(&self.times, &self.diss_power)
    }

    /// Largest `E(t_{k+1}) − E(t_k)`; non-positive for a monotone decay.
    pub fn max_energy_increase(&self) -> f64 {
        self.energy.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn balance_defect(times: &[f64], energy: &[f64], power: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let window = |lo: usize, hi: usize| {
        let de = energy[hi] - energy[lo];
        let dissipated = quadrature::trapezoid(&times[lo..=hi], &power[lo..=hi]);
        (de + dissipated).abs() / (times[hi] - times[lo])
    };
    (0..n)
        .map(|k| match k {
            0 => window(0, 1),
            k if k == n - 1 => window(n - 2, n - 1),
            k => window(k - 1, k + 1),
        })
        .collect()
}

/// First-order system `y = [x; v]`, `ẏ = [v; a(x, v, t)]`.
struct FirstOrder<'a> {
    model: &'a SystemModel,
    n: usize,
    mass_floor: f64,
}

impl FirstOrder<'_> {
    fn split(&self, t: f64, y: &[f64]) -> State {
        State { x: y[..self.n].to_vec(), v: y[self.n..].to_vec(), t }
    }

    fn rate(&self, t: f64, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>), DynamicsError> {
        let s = self.split(t, y);
        if !s.is_finite() {
            return Err(DynamicsError::Unstable { t });
        }
        let a = solve_with_floor(self.model, &s, self.mass_floor)?;
        let mut dy = s.v.clone();
        dy.extend_from_slice(&a);
        Ok((dy, a))
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for &(c, k) in terms {
        for (o, ki) in out.iter_mut().zip(k) {
            *o += h * c * ki;
        }
    }
    out
}

struct Recorder {
    times: Vec<f64>,
    states: Vec<State>,
    accels: Vec<Vec<f64>>,
}

impl Recorder {
    fn push(&mut self, s: State, a: Vec<f64>) {
        self.times.push(s.t);
        self.states.push(s);
        self.accels.push(a);
    }
}

/// Integrates the force balance from `s0` to `t_end`.
///
/// Fails outright only when `s0` itself is invalid. Errors met later return
/// the trajectory recorded so far with [`Trajectory::failure`] set.
pub fn integrate(
    model: &SystemModel,
    s0: &State,
    t_end: f64,
    options: &IntegrateOptions,
) -> Result<Trajectory, DynamicsError> {
    options.validate()?;
    model.check_state(s0)?;
    if !(t_end > s0.t) {
        return Err(DynamicsError::InvalidOptions(format!(
            "t_end = {t_end} must exceed the initial time {}",
            s0.t
        )));
    }
    // Rejecting relative to the initial mass scale lets 1-D systems detect
    // a collapsing mass matrix.
    let m0 = autodiff::hess_vv(model.kinetic(), s0)?;
    let mass_floor = m0.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()));
    let sys = FirstOrder { model, n: model.n(), mass_floor };

    let mut y: Vec<f64> = s0.x.iter().chain(&s0.v).copied().collect();
    let (k1, a0) = sys.rate(s0.t, &y)?;
    let mut rec = Recorder { times: vec![], states: vec![], accels: vec![] };
    rec.push(s0.clone(), a0);

    let failure = match options.method {
        Method::Rk4 { dt } => run_rk4(&sys, s0.t, t_end, dt, options.stride, &mut y, k1, &mut rec),
        Method::Rkf45 { abs_tol, rel_tol } => {
            run_rkf45(&sys, s0.t, t_end, abs_tol, rel_tol, options.stride, &mut y, k1, &mut rec)
        }
    };

    let mut energy = Vec::with_capacity(rec.states.len());
    let mut diss_power = Vec::with_capacity(rec.states.len());
    for s in &rec.states {
        energy.push(legendre_energy(model, s)?);
        diss_power.push(autodiff::eval(model.dissipation(), s)?);
    }
    let balance_defect = balance_defect(&rec.times, &energy, &diss_power);
    Ok(Trajectory {
        labels: model.labels().to_vec(),
        times: rec.times,
        states: rec.states,
        accels: rec.accels,
        energy,
        diss_power,
        balance_defect,
        failure,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_rk4(
    sys: &FirstOrder<'_>,
    t0: f64,
    t_end: f64,
    dt: f64,
    stride: usize,
    y: &mut Vec<f64>,
    mut k1: Vec<f64>,
    rec: &mut Recorder,
) -> Option<IntegrationFailure> {
    // uniform steps landing exactly on t_end
    let steps = ((t_end - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let h = (t_end - t0) / steps as f64;
    for step in 0..steps {
        let t = t0 + step as f64 * h;
        let stage = || -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), DynamicsError> {
            let (k2, _) = sys.rate(t + 0.5 * h, &axpy(y, 0.5 * h, &[(1.0, &k1)]))?;
            let (k3, _) = sys.rate(t + 0.5 * h, &axpy(y, 0.5 * h, &[(1.0, &k2)]))?;
            let (k4, _) = sys.rate(t + h, &axpy(y, h, &[(1.0, &k3)]))?;
            let next = axpy(y, h / 6.0, &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
            let t_next = t0 + (step + 1) as f64 * h;
            let (k_next, a_next) = sys.rate(t_next, &next)?;
            Ok((next, k_next, a_next))
        };
        match stage() {
            Ok((next, k_next, a_next)) => {
                *y = next;
                k1 = k_next;
                let last = step + 1 == steps;
                if last || (step + 1) % stride == 0 {
                    let t_next = if last { t_end } else { t0 + (step + 1) as f64 * h };
                    rec.push(sys.split(t_next, y), a_next);
                }
            }
            Err(error) => {
                return Some(IntegrationFailure { t, last_state: sys.split(t, y), error });
            }
        }
    }
    None
}

// Fehlberg 4(5) tableau
const C: [f64; 6] = [0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5];
const A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0];
const B5: [f64; 6] = [16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0];

#[allow(clippy::too_many_arguments)]
fn run_rkf45(
    sys: &FirstOrder<'_>,
    t0: f64,
    t_end: f64,
    abs_tol: f64,
    rel_tol: f64,
    stride: usize,
    y: &mut Vec<f64>,
    mut k1: Vec<f64>,
    rec: &mut Recorder,
) -> Option<IntegrationFailure> {
    let mut t = t0;
    let mut h = (1e-3_f64).min(t_end - t0);
    let mut accepted = 0usize;
    let mut last_error: Option<DynamicsError> = None;
    while t < t_end {
        h = h.min(t_end - t);
        let min_step = 1e-14 * t.abs().max(1.0);
        if h < min_step {
            let error = last_error.take().unwrap_or(DynamicsError::StepUnderflow { t, step: h });
            return Some(IntegrationFailure { t, last_state: sys.split(t, y), error });
        }
        let trial = || -> Result<(Vec<f64>, f64), DynamicsError> {
            let mut ks: Vec<Vec<f64>> = vec![k1.clone()];
            for stage in 1..6 {
                let terms: Vec<(f64, &[f64])> =
                    (0..stage).map(|j| (A[stage][j], ks[j].as_slice())).collect();
                let (k, _) = sys.rate(t + C[stage] * h, &axpy(y, h, &terms))?;
                ks.push(k);
            }
            let w4: Vec<(f64, &[f64])> = (0..6).map(|j| (B4[j], ks[j].as_slice())).collect();
            let w5: Vec<(f64, &[f64])> = (0..6).map(|j| (B5[j], ks[j].as_slice())).collect();
            let y4 = axpy(y, h, &w4);
            let y5 = axpy(y, h, &w5);
            let err = y4.iter().zip(&y5).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = abs_tol + rel_tol * y4.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
            Ok((y4, err / scale))
        };
        match trial() {
            Ok((y4, ratio)) if ratio <= 1.0 && y4.iter().all(|c| c.is_finite()) => {
                let t_next = if t_end - (t + h) < min_step { t_end } else { t + h };
                match sys.rate(t_next, &y4) {
                    Ok((k_next, a_next)) => {
                        *y = y4;
                        t = t_next;
                        k1 = k_next;
                        accepted += 1;
                        last_error = None;
                        if t >= t_end || accepted % stride == 0 {
                            rec.push(sys.split(t, y), a_next);
                        }
                        let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                        h *= grow;
                    }
                    Err(e) => {
                        last_error = Some(e);
                        h *= 0.25;
                    }
                }
            }
            Ok((_, ratio)) => {
                h *= if ratio.is_finite() { (0.9 * ratio.powf(-0.25)).clamp(0.1, 0.9) } else { 0.25 };
            }
            Err(e) => {
                last_error = Some(e);
                h *= 0.25;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_rayleigh_oscillator;

    #[test]
    fn balance_defect_of_exact_data_is_small() {
        // E = e^{-t}, Q = e^{-t}: Ė + Q = 0
        let times: Vec<f64> = (0..101).map(|i| i as f64 * 0.01).collect();
        let e: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let d = balance_defect(&times, &e, &e);
        assert!(d[1..100].iter().all(|&x| x < 1e-4));
    }

    #[test]
    fn options_are_validated() {
        let m = build_rayleigh_oscillator(1.0, 1.0, 0.0).unwrap();
        let s0 = State::new(vec![1.0], vec![0.0], 0.0).unwrap();
        let bad = IntegrateOptions { method: Method::Rk4 { dt: 0.0 }, stride: 1 };
        assert!(matches!(integrate(&m, &s0, 1.0, &bad), Err(DynamicsError::InvalidOptions(_))));
        let bad = IntegrateOptions { stride: 0, ..IntegrateOptions::default() };
        assert!(integrate(&m, &s0, 1.0, &bad).is_err());
        assert!(integrate(&m, &s0, 0.0, &IntegrateOptions::default()).is_err());
    }

    #[test]
    fn stride_thins_samples_and_keeps_endpoint() {
        let m = build_rayleigh_oscillator(1.0, 1.0, 0.0).unwrap();
        let s0 = State::new(vec![1.0], vec![0.0], 0.0).unwrap();
        let opts = IntegrateOptions { method: Method::Rk4 { dt: 0.01 }, stride: 7 };
        let tr = integrate(&m, &s0, 1.0, &opts).unwrap();
        assert_eq!(tr.len(), 1 + 100 / 7 + 1);
        assert_eq!(*tr.times.last().unwrap(), 1.0);
    }
}
