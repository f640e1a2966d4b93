//! Seeded sampling shared by model validation and the verification suites.
//!
//! Sample points come from ChaCha8 (a counter-based stream cipher generator)
//! seeded through `rand`'s `seed_from_u64`; a uniform draw on `[lo, hi)` is
//! `lo + (hi - lo) * u` with `u` the standard 53-bit `f64` sample. Any
//! implementation using the same generator, seed and draw order reproduces
//! the same points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x7E9D_2024;

pub type SampleRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Axis-aligned box of coordinates and rates.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBox {
    pub x: Vec<(f64, f64)>,
    pub v: Vec<(f64, f64)>,
}

impl SampleBox {
    pub fn uniform(n: usize, x: (f64, f64), v: (f64, f64)) -> Self {
        Self { x: vec![x; n], v: vec![v; n] }
    }

    pub fn draw(&self, rng: &mut SampleRng) -> (Vec<f64>, Vec<f64>) {
        let x = self.x.iter().map(|&(lo, hi)| uniform(rng, lo, hi)).collect();
        let v = self.v.iter().map(|&(lo, hi)| uniform(rng, lo, hi)).collect();
        (x, v)
    }
}
