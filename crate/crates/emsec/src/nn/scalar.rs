//! Floating-point abstraction so the network runs in f32 for production and
//! in f64 for the finite-difference gradient oracle.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + PartialOrd
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum<Self>
{
    const ZERO: Self;
    const ONE: Self;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    /// Error function at the native precision.
    fn erf(self) -> Self;
    fn maximum(self, other: Self) -> Self;
    fn is_finite_scalar(self) -> bool;
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn exp(self) -> Self {
        f32::exp(self)
    }
    fn erf(self) -> Self {
        libm::erff(self)
    }
    fn maximum(self, other: Self) -> Self {
        f32::max(self, other)
    }
    fn is_finite_scalar(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn erf(self) -> Self {
        libm::erf(self)
    }
    fn maximum(self, other: Self) -> Self {
        f64::max(self, other)
    }
    fn is_finite_scalar(self) -> bool {
        self.is_finite()
    }
}

/// Exact GeLU: `x * Phi(x)` with the Gaussian CDF written via the error
/// function (not the tanh approximation).
pub fn gelu<S: Scalar>(x: S) -> S {
    let half = S::from_f64(0.5);
    let inv_sqrt2 = S::from_f64(std::f64::consts::FRAC_1_SQRT_2);
    half * x * (S::ONE + (x * inv_sqrt2).erf())
}

/// d/dx GeLU = Phi(x) + x * phi(x).
pub fn gelu_prime<S: Scalar>(x: S) -> S {
    let half = S::from_f64(0.5);
    let inv_sqrt2 = S::from_f64(std::f64::consts::FRAC_1_SQRT_2);
    let inv_sqrt_2pi = S::from_f64(1.0 / (2.0 * std::f64::consts::PI).sqrt());
    let cdf = half * (S::ONE + (x * inv_sqrt2).erf());
    let pdf = inv_sqrt_2pi * (-(half * x * x)).exp();
    cdf + x * pdf
}
