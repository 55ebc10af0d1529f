//! Coefficient rings shared by the exact and floating-point code paths.

use num::{BigInt, BigRational, One, Zero};
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

/// Anything we can build polynomials and Jordan products over.
pub trait Coeff:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;
}

impl Coeff for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Coeff for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

/// Exact rational value of a finite double.
pub fn rational_from_f64(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite float")
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    use num::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
