//! Scalar abstraction: all solvers are generic over the underlying real type.
//!
//! `f64` is the working precision for production runs; `f32` is supported for
//! memory-bound experiments. Validation thresholds scale with the precision of
//! the type, so the same constructors stay usable under either instantiation.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type underlying all matrices, signals and probabilities.
///
/// The associated tolerances are the validation thresholds used throughout the
/// crate. They are precision-dependent: a row-sum check meaningful at `1e-10`
/// in `f64` would reject every `f32` matrix.
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy {
    /// Maximum deviation of a probability row sum from 1.
    fn stochastic_tol() -> Self;
    /// How far below zero a probability entry may sit before it is rejected
    /// (rounding slack in otherwise nonnegative data).
    fn negativity_slack() -> Self;
    /// Maximum Hermiticity deviation accepted for Hamiltonians.
    fn hermiticity_tol() -> Self;
    /// Condition-number ceiling for single-step resolvents. A factor
    /// `(I - c·δ·A)` worse-conditioned than this signals a step size too
    /// large for the generator spectrum.
    fn condition_limit() -> Self;
    /// Maximum deviation of an initial-distribution sum from 1.
    fn weight_tol() -> Self;
}

impl Real for f64 {
    fn stochastic_tol() -> Self {
        1e-10
    }
    fn negativity_slack() -> Self {
        1e-14
    }
    fn hermiticity_tol() -> Self {
        1e-10
    }
    fn condition_limit() -> Self {
        1e12
    }
    fn weight_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn stochastic_tol() -> Self {
        1e-4
    }
    fn negativity_slack() -> Self {
        1e-6
    }
    fn hermiticity_tol() -> Self {
        1e-4
    }
    fn condition_limit() -> Self {
        1e4
    }
    fn weight_tol() -> Self {
        1e-5
    }
}

/// Convert an `f64` constant into the working scalar type.
///
/// Panics on non-finite input; literals passed here are compile-time
/// constants.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant")
}

/// Complex number from `f64` parts in the working scalar type.
#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(real(re), real(im))
}

/// The imaginary unit.
#[inline]
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Modulus of a complex number over a generic real scalar.
#[inline]
pub fn cnorm<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}
