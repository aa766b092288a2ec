//! Numeric traits shared by the generic kernels.
//!
//! [`Real`] is the floating-point bound used by the tagger, chart geometry and
//! text metrics. [`Field`] is the weaker bound used by the linear solver and the
//! line breaker: it admits exact rationals as well as floats, so those kernels
//! can be checked against an exact instantiation.

use std::fmt::Debug;

use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// f32 or f64.
pub trait Real: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// An ordered field with a comparison tolerance.
///
/// Floats use a small absolute epsilon; rationals compare exactly.
pub trait Field: Clone + Num + Signed + PartialOrd + Debug + Send + Sync {
    fn tolerance() -> Self;
    fn from_f64_lossy(v: f64) -> Self;
    fn to_f64_lossy(&self) -> f64;

    fn is_pos(&self) -> bool {
        *self > Self::tolerance()
    }
    fn is_neg(&self) -> bool {
        *self < -Self::tolerance()
    }
    fn near_zero(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
}

impl Field for f64 {
    fn tolerance() -> Self {
        1e-9
    }
    fn from_f64_lossy(v: f64) -> Self {
        v
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Field for f32 {
    fn tolerance() -> Self {
        1e-5
    }
    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }
    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl Field for Ratio<i64> {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }
    fn from_f64_lossy(v: f64) -> Self {
        Ratio::<i64>::approximate_float(v).expect("finite value")
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Field for BigRational {
    fn tolerance() -> Self {
        BigRational::from_integer(0.into())
    }
    fn from_f64_lossy(v: f64) -> Self {
        BigRational::from_float(v).expect("finite value")
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Numerically stable `ln(sum(exp(x)))`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<T: Real>(values: impl IntoIterator<Item = T> + Clone) -> T {
    let max = values
        .clone()
        .into_iter()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    if max == T::neg_infinity() {
        return max;
    }
    let sum = values
        .into_iter()
        .fold(T::zero(), |acc, v| acc + (v - max).exp());
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_naive() {
        let xs = [0.1_f64, -2.0, 3.5];
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(xs.iter().copied()) - naive).abs() < 1e-12);
        assert_eq!(log_sum_exp(std::iter::empty::<f64>()), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp([f32::NEG_INFINITY, 0.0]), 0.0);
    }

    #[test]
    fn rational_tolerance_is_exact() {
        let third = Ratio::new(1i64, 3);
        assert!(third.is_pos());
        assert!((third - Ratio::new(1, 3)).near_zero());
    }
}
