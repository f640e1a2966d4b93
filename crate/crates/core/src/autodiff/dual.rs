//! Second-order forward-mode dual numbers.
//!
//! A [`Dual2`] carries the truncated Taylor jet of a scalar along one seed
//! direction `h`:
//!
//! ```text
//! f(x + s·h) = value + deriv·s + deriv2·s²/2 + O(s³)
//! ```
//!
//! so `deriv` is the directional first derivative and `deriv2` the directional
//! second derivative. Mixed second partials are recovered by polarization of
//! three directional passes (see [`super::hess_vv`]).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Arithmetic that potential bodies are written against.
///
/// Implemented for `f64` (plain evaluation) and [`Dual2`] (differentiation).
/// Bodies should put the generic operand on the left of mixed `f64` ops,
/// e.g. `x.sin() + 1.0`.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn constant(c: f64) -> Self;
    fn value(self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn powi(self, p: i32) -> Self;
    fn abs(self) -> Self;
    fn tanh(self) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn square(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    #[inline]
    fn constant(c: f64) -> Self {
        c
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn powi(self, p: i32) -> Self {
        f64::powi(self, p)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
}

/// Value plus first and second directional derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual2 {
    pub value: f64,
    pub deriv: f64,
    pub deriv2: f64,
}

impl Dual2 {
    #[inline]
    pub const fn new(value: f64, deriv: f64, deriv2: f64) -> Self {
        Self { value, deriv, deriv2 }
    }

    /// An independent variable moving with unit speed along the seed direction
    /// scaled by `seed`.
    #[inline]
    pub const fn variable(value: f64, seed: f64) -> Self {
        Self { value, deriv: seed, deriv2: 0.0 }
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value`.
    #[inline]
    fn chain(self, g: f64, g1: f64, g2: f64) -> Self {
        Self {
            value: g,
            deriv: g1 * self.deriv,
            deriv2: g2 * self.deriv * self.deriv + g1 * self.deriv2,
        }
    }
}

impl fmt::Display for Dual2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε + {}ε²/2", self.value, self.deriv, self.deriv2)
    }
}

impl From<f64> for Dual2 {
    fn from(c: f64) -> Self {
        Self::new(c, 0.0, 0.0)
    }
}

impl Add for Dual2 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.deriv + rhs.deriv, self.deriv2 + rhs.deriv2)
    }
}

impl Sub for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.deriv - rhs.deriv, self.deriv2 - rhs.deriv2)
    }
}

impl Mul for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.deriv * rhs.value + self.value * rhs.deriv,
            self.deriv2 * rhs.value + 2.0 * self.deriv * rhs.deriv + self.value * rhs.deriv2,
        )
    }
}

impl Div for Dual2 {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let c = self.value / rhs.value;
        let c1 = (self.deriv - c * rhs.deriv) / rhs.value;
        let c2 = (self.deriv2 - 2.0 * c1 * rhs.deriv - c * rhs.deriv2) / rhs.value;
        Self::new(c, c1, c2)
    }
}

impl Neg for Dual2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.value, -self.deriv, -self.deriv2)
    }
}

impl Add<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Self::new(self.value + rhs, self.deriv, self.deriv2)
    }
}

impl Sub<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Self::new(self.value - rhs, self.deriv, self.deriv2)
    }
}

impl Mul<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.value * rhs, self.deriv * rhs, self.deriv2 * rhs)
    }
}

impl Div<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        Self::new(self.value / rhs, self.deriv / rhs, self.deriv2 / rhs)
    }
}

impl Add<Dual2> for f64 {
    type Output = Dual2;
    #[inline]
    fn add(self, rhs: Dual2) -> Dual2 {
        rhs + self
    }
}

impl Sub<Dual2> for f64 {
    type Output = Dual2;
    #[inline]
    fn sub(self, rhs: Dual2) -> Dual2 {
        Dual2::new(self - rhs.value, -rhs.deriv, -rhs.deriv2)
    }
}

impl Mul<Dual2> for f64 {
    type Output = Dual2;
    #[inline]
    fn mul(self, rhs: Dual2) -> Dual2 {
        rhs * self
    }
}

impl Div<Dual2> for f64 {
    type Output = Dual2;
    #[inline]
    fn div(self, rhs: Dual2) -> Dual2 {
        Dual2::from(self) / rhs
    }
}

impl AddAssign for Dual2 {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dual2 {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dual2 {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Scalar for Dual2 {
    #[inline]
    fn constant(c: f64) -> Self {
        Self::from(c)
    }

    #[inline]
    fn value(self) -> f64 {
        self.value
    }

    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    fn ln(self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(self.value.ln(), inv, -inv * inv)
    }

    fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        let g1 = 0.5 / r;
        self.chain(r, g1, -0.5 * g1 / self.value)
    }

    fn powf(self, p: f64) -> Self {
        let g = self.value.powf(p);
        let g1 = p * self.value.powf(p - 1.0);
        let g2 = p * (p - 1.0) * self.value.powf(p - 2.0);
        self.chain(g, g1, g2)
    }

    fn powi(self, p: i32) -> Self {
        let pf = f64::from(p);
        let g = self.value.powi(p);
        let g1 = if p == 0 { 0.0 } else { pf * self.value.powi(p - 1) };
        let g2 = if p == 0 || p == 1 { 0.0 } else { pf * (pf - 1.0) * self.value.powi(p - 2) };
        self.chain(g, g1, g2)
    }

    fn abs(self) -> Self {
        // one-sided at 0: the sign of +0.0 is taken
        let s = if self.value.is_sign_negative() { -1.0 } else { 1.0 };
        self.chain(self.value.abs(), s, 0.0)
    }

    fn tanh(self) -> Self {
        let t = self.value.tanh();
        let g1 = 1.0 - t * t;
        self.chain(t, g1, -2.0 * t * g1)
    }
}
