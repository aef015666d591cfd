//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point type the transforms and estimators are generic over.
///
/// Implemented for `f32` and `f64`. Everything in the estimator is tuned for
/// `f64`; `f32` is supported for the waveform and dictionary layers where
/// single precision is adequate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Sum
    + NumAssign
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + Sum
        + NumAssign
        + 'static
{
}

/// `exp(j·2π·turns)`, with `turns` first reduced to `[0, 1)`.
#[inline]
pub fn cis_turns<T: Real>(turns: T) -> Complex<T> {
    let frac = turns - turns.floor();
    let angle = T::TAU() * frac;
    Complex::new(angle.cos(), angle.sin())
}

/// `exp(j·2π·num/den)` evaluated with the numerator reduced modulo `den`
/// in integer arithmetic, so large quadratic phases stay exact.
#[inline]
pub fn cis_rational<T: Real>(num: i128, den: i128) -> Complex<T> {
    debug_assert!(den > 0);
    let r = num.rem_euclid(den);
    if r == 0 {
        return Complex::new(T::one(), T::zero());
    }
    let turns = T::from_i128(r).unwrap() / T::from_i128(den).unwrap();
    let angle = T::TAU() * turns;
    Complex::new(angle.cos(), angle.sin())
}

#[inline]
pub fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

#[inline]
pub fn norm<T: Real>(v: &[Complex<T>]) -> T {
    norm_sqr(v).sqrt()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y).norm())
        .fold(T::zero(), T::max)
}
