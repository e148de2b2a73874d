//! Scalar abstraction shared by the floating and exact-rational code paths.
//!
//! Every matrix routine in the crate is written once against [`Scalar`] and
//! instantiated for `f64` and for [`Rational`]. Exact instantiations never
//! round, so equality checks in rational mode are literal equality.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num::bigint::BigInt;
use num::{BigRational, Num, One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational used for dyadic masks such as B-splines.
pub type Rational = BigRational;

pub trait Scalar:
    Num + Clone + Debug + Display + PartialOrd + Neg<Output = Self> + Send + Sync + 'static
{
    /// True when arithmetic on this type is exact.
    const EXACT: bool;

    fn to_f64(&self) -> f64;

    /// Absolute value as `f64`; used for pivot selection only.
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Zero test at a given scale. Exact types ignore `rel_tol`.
    fn is_negligible(&self, scale: f64, rel_tol: f64) -> bool;

    fn from_i64(v: i64) -> Self;

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// `2^-k`, exact for both instantiations.
    fn pow2_neg(k: u32) -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_negligible(&self, scale: f64, rel_tol: f64) -> bool {
        self.abs() <= rel_tol * scale.max(f64::MIN_POSITIVE)
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn pow2_neg(k: u32) -> Self {
        (-(k as f64)).exp2()
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn to_f64(&self) -> f64 {
        // BigRational::to_f64 handles huge numerators/denominators without overflow
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn magnitude(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            Scalar::to_f64(&self.abs()).max(f64::MIN_POSITIVE)
        }
    }

    fn is_negligible(&self, _scale: f64, _rel_tol: f64) -> bool {
        self.is_zero()
    }

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn pow2_neg(k: u32) -> Self {
        Rational::new(BigInt::one(), BigInt::one() << k as usize)
    }
}

/// Parses `"a/b"` or an integer into an exact rational. Decimal literals
/// are rejected; they are handled as floats by the caller.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

/// Converts a finite `f64` into the exact rational it denotes.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn norm_l2<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt()
}

pub fn norm_l1<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.to_f64().abs()).sum()
}

pub fn sum<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + x.clone())
}
