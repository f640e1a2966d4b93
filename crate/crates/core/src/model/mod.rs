//! Physical systems as a potential triple: kinetic energy `K(x, v)`, Gibbs
//! energy `G(x, t)` and dissipation function `Q(x, v)`.

mod builtin;

pub use builtin::{
    build_disk_damper, build_rayleigh_oscillator, norton_hoff_dissipation, BuiltinSystem,
    DiskDamper, NortonHoff, RayleighOscillator,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{self, AdError, Arity, ScalarField};
use crate::sampling::{self, SampleBox};
use crate::tep;

/// Number of random states used to check `Q ≥ 0` when a model is validated.
pub const DISSIPATION_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter {name} = {value}: {reason}")]
    InvalidParameter { name: String, value: f64, reason: &'static str },
    #[error("unknown parameter `{name}` for system `{system}`")]
    UnknownParameter { system: String, name: String },
    #[error("missing parameter `{name}` for system `{system}`")]
    MissingParameter { system: String, name: String },
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("{field} has arity {got:?}, expected {expected:?}")]
    Arity { field: &'static str, expected: Arity, got: Arity },
    #[error("state has non-finite entries")]
    NonFiniteState,
    #[error("state dimension ({x} coordinates, {v} rates) does not match model dimension {n}")]
    StateDimension { n: usize, x: usize, v: usize },
    #[error("dissipation is negative ({value:e}) at x = {x:?}, v = {v:?}")]
    NegativeDissipation { x: Vec<f64>, v: Vec<f64>, value: f64 },
    #[error("dissipation does not vanish at rest ({value:e}) at x = {x:?}")]
    DissipationAtRest { x: Vec<f64>, value: f64 },
    #[error("dissipation is homogeneous of degree {degree} <= 1 in the rates")]
    LowDegreeDissipation { degree: f64 },
    #[error(transparent)]
    Ad(#[from] AdError),
}

/// Generalized coordinates `x`, rates `v = ẋ` and time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl State {
    /// Rejects non-finite entries. Dimension agreement with a model is
    /// checked by [`SystemModel::check_state`].
    pub fn new(x: Vec<f64>, v: Vec<f64>, t: f64) -> Result<Self, ModelError> {
        let s = Self { x, v, t };
        if !s.is_finite() {
            return Err(ModelError::NonFiniteState);
        }
        Ok(s)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().chain(&self.v).all(|c| c.is_finite())
    }
}

/// The triple `(K, G, Q)` over `n` generalized coordinates.
#[derive(Clone, Debug)]
pub struct SystemModel {
    labels: Vec<String>,
    kinetic: ScalarField,
    gibbs: ScalarField,
    dissipation: ScalarField,
}

impl SystemModel {
    /// Checks arities only. Use [`SystemModel::validate_dissipation`] to test
    /// the sign of `Q`; the built-in constructors do both.
    pub fn new(
        labels: Vec<String>,
        kinetic: ScalarField,
        gibbs: ScalarField,
        dissipation: ScalarField,
    ) -> Result<Self, ModelError> {
        let n = labels.len();
        let state_arity = Arity { n_x: n, n_v: n, has_time: false };
        let check = |field: &'static str, f: &ScalarField, expected: Arity| {
            let got = f.arity();
            if got.n_x != expected.n_x || got.n_v != expected.n_v {
                Err(ModelError::Arity { field, expected, got })
            } else {
                Ok(())
            }
        };
        check("K", &kinetic, state_arity)?;
        check("G", &gibbs, Arity { n_x: n, n_v: 0, has_time: gibbs.arity().has_time })?;
        check("Q", &dissipation, state_arity)?;
        Ok(Self { labels, kinetic, gibbs, dissipation })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kinetic(&self) -> &ScalarField {
        &self.kinetic
    }

    pub fn gibbs(&self) -> &ScalarField {
        &self.gibbs
    }

    pub fn dissipation(&self) -> &ScalarField {
        &self.dissipation
    }

    pub fn check_state(&self, s: &State) -> Result<(), ModelError> {
        let n = self.n();
        if s.x.len() != n || s.v.len() != n {
            return Err(ModelError::StateDimension { n, x: s.x.len(), v: s.v.len() });
        }
        if !s.is_finite() {
            return Err(ModelError::NonFiniteState);
        }
        Ok(())
    }

    /// `L = K − G`.
    pub fn lagrangian(&self, s: &State) -> Result<f64, ModelError> {
        self.check_state(s)?;
        Ok(autodiff::eval(&self.kinetic, s)? - autodiff::eval(&self.gibbs, s)?)
    }

    /// Falsifiable check of the dissipation axioms on `samples` seeded random
    /// states in `bx`: `Q(x, 0) = 0`, `Q ≥ 0`, and no homogeneity of degree
    /// ≤ 1 in the rates (the force construction is undefined at rest there).
    pub fn validate_dissipation(
        &self,
        bx: &SampleBox,
        samples: usize,
        seed: u64,
    ) -> Result<(), ModelError> {
        let mut rng = sampling::seeded(seed);
        let q = &self.dissipation;
        let mut degree_checks = 0;
        for _ in 0..samples {
            let (x, v) = bx.draw(&mut rng);
            let rest = State { x: x.clone(), v: vec![0.0; v.len()], t: 0.0 };
            let q0 = autodiff::eval(q, &rest)?;
            if q0.abs() > 1e-14 {
                return Err(ModelError::DissipationAtRest { x, value: q0 });
            }
            let s = State { x, v, t: 0.0 };
            let value = autodiff::eval(q, &s)?;
            if value < 0.0 || value.is_nan() {
                return Err(ModelError::NegativeDissipation { x: s.x, v: s.v, value });
            }
            if degree_checks < 64 && value > 0.0 {
                degree_checks += 1;
                if let Some(degree) = tep::homogeneity_degree(q, &s)? {
                    if degree <= 1.0 + 1e-9 {
                        return Err(ModelError::LowDegreeDissipation { degree });
                    }
                }
            }
        }
        Ok(())
    }
}
