use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::autodiff::{FieldBody, Scalar, ScalarField};
use crate::sampling::{SampleBox, DEFAULT_SEED};

use super::{ModelError, SystemModel, DISSIPATION_SAMPLES};

/// Point mass `m` on a massless disk of radius `r` with a horizontal damper
/// of constant `eta`, under gravity `g`. One coordinate, the angle `phi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskDamper {
    pub m: f64,
    pub r: f64,
    pub eta: f64,
    pub g: f64,
}

/// Linear damped oscillator `K = ½mv²`, `G = ½kx²`, `Q = ηv²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayleighOscillator {
    pub m: f64,
    pub k: f64,
    pub eta: f64,
}

struct DiskKinetic {
    mr2: f64,
}

impl FieldBody for DiskKinetic {
    fn eval<S: Scalar>(&self, x: &[S], v: &[S], _t: S) -> S {
        (x[0].sin() + 1.0) * v[0] * v[0] * self.mr2
    }
}

struct DiskGibbs {
    mgr: f64,
}

impl FieldBody for DiskGibbs {
    fn eval<S: Scalar>(&self, x: &[S], _v: &[S], _t: S) -> S {
        x[0].sin() * self.mgr
    }
}

/// `η v_d²` with damper velocity `v_d = r φ̇ (1 + cos φ)`.
struct DiskDissipation {
    eta_r2: f64,
}

impl FieldBody for DiskDissipation {
    fn eval<S: Scalar>(&self, x: &[S], v: &[S], _t: S) -> S {
        let lever = x[0].cos() + 1.0;
        lever * lever * v[0] * v[0] * self.eta_r2
    }
}

struct HalfQuadratic {
    coeff: f64,
    on_rates: bool,
}

impl FieldBody for HalfQuadratic {
    fn eval<S: Scalar>(&self, x: &[S], v: &[S], _t: S) -> S {
        let z = if self.on_rates { v[0] } else { x[0] };
        z * z * (0.5 * self.coeff)
    }
}

/// Viscous Norton-Hoff dissipation `α‖v‖^m` (Euclidean norm over all rates).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NortonHoff {
    pub alpha: f64,
    pub m: f64,
}

impl FieldBody for NortonHoff {
    fn eval<S: Scalar>(&self, _x: &[S], v: &[S], _t: S) -> S {
        let mut norm2 = S::zero();
        for &c in v {
            norm2 += c * c;
        }
        norm2.powf(0.5 * self.m) * self.alpha
    }
}

pub fn norton_hoff_dissipation(n: usize, alpha: f64, m: f64) -> ScalarField {
    ScalarField::of_state(n, NortonHoff { alpha, m })
}

fn positive(name: &str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::InvalidParameter {
            name: name.into(),
            value,
            reason: "must be positive and finite",
        })
    }
}

fn non_negative(name: &str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ModelError::InvalidParameter {
            name: name.into(),
            value,
            reason: "must be non-negative and finite",
        })
    }
}

pub fn build_disk_damper(m: f64, r: f64, eta: f64, g: f64) -> Result<SystemModel, ModelError> {
    let (m, r) = (positive("m", m)?, positive("r", r)?);
    let (eta, g) = (non_negative("eta", eta)?, non_negative("g", g)?);
    let model = SystemModel::new(
        vec!["phi".into()],
        ScalarField::of_state(1, DiskKinetic { mr2: m * r * r }),
        ScalarField::of_coordinates(1, DiskGibbs { mgr: m * g * r }),
        ScalarField::of_state(1, DiskDissipation { eta_r2: eta * r * r }),
    )?;
    model.validate_dissipation(
        &SampleBox::uniform(1, (-PI, PI), (-10.0, 10.0)),
        DISSIPATION_SAMPLES,
        DEFAULT_SEED,
    )?;
    Ok(model)
}

pub fn build_rayleigh_oscillator(m: f64, k: f64, eta: f64) -> Result<SystemModel, ModelError> {
    let m = positive("m", m)?;
    let (k, eta) = (non_negative("k", k)?, non_negative("eta", eta)?);
    let model = SystemModel::new(
        vec!["x".into()],
        ScalarField::of_state(1, HalfQuadratic { coeff: m, on_rates: true }),
        ScalarField::of_coordinates(1, HalfQuadratic { coeff: k, on_rates: false }),
        ScalarField::of_state(1, HalfQuadratic { coeff: 2.0 * eta, on_rates: true }),
    )?;
    model.validate_dissipation(
        &SampleBox::uniform(1, (-10.0, 10.0), (-10.0, 10.0)),
        DISSIPATION_SAMPLES,
        DEFAULT_SEED,
    )?;
    Ok(model)
}

/// A compiled-in system selected by id and a strict parameter map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BuiltinSystem {
    DiskDamper(DiskDamper),
    RayleighOscillator(RayleighOscillator),
}

impl BuiltinSystem {
    pub const IDS: [&'static str; 2] = ["disk_damper", "rayleigh_oscillator"];

    /// Every parameter must be present and no others are accepted.
    pub fn from_parameters(id: &str, params: &BTreeMap<String, f64>) -> Result<Self, ModelError> {
        let names: &[&str] = match id {
            "disk_damper" => &["m", "r", "eta", "g"],
            "rayleigh_oscillator" => &["m", "k", "eta"],
            other => return Err(ModelError::UnknownSystem(other.into())),
        };
        if let Some(extra) = params.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(ModelError::UnknownParameter { system: id.into(), name: extra.clone() });
        }
        let get = |name: &str| {
            params.get(name).copied().ok_or_else(|| ModelError::MissingParameter {
                system: id.into(),
                name: name.into(),
            })
        };
        Ok(match id {
            "disk_damper" => Self::DiskDamper(DiskDamper {
                m: get("m")?,
                r: get("r")?,
                eta: get("eta")?,
                g: get("g")?,
            }),
            _ => Self::RayleighOscillator(RayleighOscillator {
                m: get("m")?,
                k: get("k")?,
                eta: get("eta")?,
            }),
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::DiskDamper(_) => "disk_damper",
            Self::RayleighOscillator(_) => "rayleigh_oscillator",
        }
    }

    pub fn build(&self) -> Result<SystemModel, ModelError> {
        match *self {
            Self::DiskDamper(p) => build_disk_damper(p.m, p.r, p.eta, p.g),
            Self::RayleighOscillator(p) => build_rayleigh_oscillator(p.m, p.k, p.eta),
        }
    }
}
