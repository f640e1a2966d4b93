use std::f64::consts::PI;

use tepdyn::continuum1d::{
    integrate_bar, mass_audit, momentum_terms, BarConfig, BarOptions, BarState, DensityLaw, DEFAULT_DELTA,
};

fn sine_bar(cfg: &BarConfig, amp: f64) -> BarState {
    let x = cfg.node_positions();
    let mut s = BarState::zero(cfg);
    for i in 1..cfg.nodes - 1 {
        s.w[i] = amp * (PI * x[i] / cfg.length).sin();
    }
    s
}

fn energy_mismatch(nodes: usize) -> f64 {
    let cfg = BarConfig::new(nodes, 1.0, DensityLaw::Linear { rho0: 1.0, beta: 0.0 }, 0.1, 2.0, DEFAULT_DELTA).unwrap();
    let tr = integrate_bar(&sine_bar(&cfg, 0.1), 1.0, &cfg, &BarOptions { dt: 2.5e-4, stride: 4 }).unwrap();
    assert!(tr.completed());
    let lost = tr.kinetic[0] - tr.kinetic.last().unwrap();
    (lost - tr.dissipated_energy()).abs() / lost
}

#[test]
fn viscous_decay_balances_dissipation() {
    let (e1, e2) = (energy_mismatch(26), energy_mismatch(51));
    assert!(e2 < 1e-3, "{e2:e}");
    assert!((e1 / e2).log2() > 1.8, "{e1:e} -> {e2:e}");
}

#[test]
fn linear_viscous_mode_decays_exponentially() {
    // ρ ẇ = α w'' with w = A sin(πx) decays at rate απ²/ρ, up to O(dx²).
    let (rho0, alpha) = (2.0, 0.5);
    let cfg = BarConfig::new(101, 1.0, DensityLaw::Linear { rho0, beta: 0.0 }, alpha, 2.0, DEFAULT_DELTA).unwrap();
    let tr = integrate_bar(&sine_bar(&cfg, 0.2), 0.5, &cfg, &BarOptions { dt: 5e-4, stride: 100 }).unwrap();
    let last = tr.states.last().unwrap();
    let expected = 0.2 * (-alpha * PI * PI / rho0 * 0.5).exp();
    assert!((last.w[50] - expected).abs() < 1e-3 * expected, "{} vs {expected}", last.w[50]);
}

#[test]
fn constant_density_conserves_mass_exactly() {
    let cfg = BarConfig::new(41, 1.0, DensityLaw::Exponential { rho0: 3.0, beta: 0.0 }, 1.0, 3.0, DEFAULT_DELTA).unwrap();
    let tr = integrate_bar(&sine_bar(&cfg, 0.05), 0.2, &cfg, &BarOptions { dt: 1e-3, stride: 10 }).unwrap();
    assert!(tr.mass.iter().all(|&m| m == tr.mass[0]));
    let rep = mass_audit(&tr.states, &cfg).unwrap();
    assert_eq!(rep.max_mass_drift, 0.0);
    assert_eq!(rep.max_defect, 0.0);
}

#[test]
fn exponential_density_exchanges_mass_consistently() {
    let cfg = BarConfig::new(51, 1.0, DensityLaw::Exponential { rho0: 1000.0, beta: 3.0 }, 10.0, 2.0, DEFAULT_DELTA).unwrap();
    let tr = integrate_bar(&sine_bar(&cfg, 0.02), 0.5, &cfg, &BarOptions { dt: 5e-3, stride: 5 }).unwrap();
    assert!(tr.completed());
    let rep = mass_audit(&tr.states, &cfg).unwrap();
    assert!(rep.max_mass_drift > 0.0);
    assert!(rep.max_defect < 1e-3 * rep.rate.iter().map(|r| r.abs()).fold(0.0, f64::max));
}

#[test]
fn stride_keeps_the_final_time() {
    let cfg = BarConfig::new(11, 1.0, DensityLaw::Linear { rho0: 1.0, beta: 0.0 }, 0.01, 2.0, DEFAULT_DELTA).unwrap();
    let tr = integrate_bar(&sine_bar(&cfg, 0.1), 0.1, &cfg, &BarOptions { dt: 0.01, stride: 3 }).unwrap();
    assert_eq!(tr.times.len(), 5);
    assert_eq!(*tr.times.last().unwrap(), 0.1);
}

#[test]
fn density_terms_reported_separately() {
    let cfg = BarConfig::new(21, 1.0, DensityLaw::Linear { rho0: 1.0, beta: 2.0 }, 1.0, 2.0, DEFAULT_DELTA).unwrap();
    let s = sine_bar(&cfg, 0.3);
    let t = momentum_terms(&s, &cfg).unwrap();
    // u = 0: ρ = ρ0 everywhere, ρ' = ρ0β
    assert!(t.density.iter().all(|&r| r == 1.0));
    let i = 5;
    let sum = t.stress_divergence[i] - t.rate_term[i] - t.gradient_term[i];
    assert!((t.accel[i] - sum).abs() < 1e-14 * sum.abs().max(1.0));
    assert!(t.rate_term.iter().any(|&r| r != 0.0));
}
