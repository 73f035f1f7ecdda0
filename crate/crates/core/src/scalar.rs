//! Arithmetic backends for measures and step values.
//!
//! `f64` is the fast backend. `BigRational` keeps node measures, averages
//! and level sets exact, which turns the inequality checks on dyadic trees
//! into zero-tolerance comparisons.

use core::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

/// Scalar field used for tree measures and leaf values.
pub trait Scalar: Num + Clone + PartialOrd + Debug {
    /// Builds the exact value `num / den`.
    fn from_ratio(num: u64, den: u64) -> Self;

    /// Whether arithmetic in this backend is exact (no rounding).
    fn exact() -> bool;

    /// Lossy conversion for reporting and for the `x^q` power steps, which
    /// are irrational and therefore always evaluated in floating point.
    fn as_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn exact() -> bool {
        false
    }

    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn exact() -> bool {
        true
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}
