//! Binary-digit representation of points of `[0, 1]` and the shift map.

use std::fmt;

use crate::two_scale::Digit;

/// `x = 0.e1 e2 ... em` in binary, optionally followed by an infinite tail
/// of ones.
///
/// Without a tail the representation is canonical (trailing zeros are
/// dropped). `x = 1` is the empty prefix with a ones tail ([`DyadicPoint::one`]).
/// A nonempty prefix with a ones tail is the non-terminating expansion of a
/// dyadic rational, kept so both one-sided digit paths can be evaluated.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicPoint {
    digits: Vec<Digit>,
    ones_tail: bool,
}

impl DyadicPoint {
    pub fn zero() -> Self {
        Self {
            digits: Vec::new(),
            ones_tail: false,
        }
    }

    pub fn one() -> Self {
        Self {
            digits: Vec::new(),
            ones_tail: true,
        }
    }

    pub fn from_digits(digits: impl IntoIterator<Item = Digit>) -> Self {
        let mut digits: Vec<Digit> = digits.into_iter().collect();
        while digits.last() == Some(&Digit::Zero) {
            digits.pop();
        }
        Self {
            digits,
            ones_tail: false,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Self::from_digits(bits.iter().map(|&b| Digit::from_bit(b)))
    }

    /// `prefix` followed by `111...`; the value is `0.prefix + 2^-len(prefix)`.
    pub fn with_ones_tail(prefix: impl IntoIterator<Item = Digit>) -> Self {
        Self {
            digits: prefix.into_iter().collect(),
            ones_tail: true,
        }
    }

    /// `k / 2^level` for `0 <= k <= 2^level`; `k = 2^level` gives [`Self::one`].
    pub fn from_ratio(k: u64, level: u32) -> Self {
        assert!(level < 64, "level too deep for u64 numerators");
        assert!(k <= 1u64 << level, "point outside [0, 1]");
        if k == 1u64 << level {
            return Self::one();
        }
        Self::from_digits((0..level).map(|i| Digit::from_bit(((k >> (level - 1 - i)) & 1) as u8)))
    }

    /// Largest level-`depth` dyadic point not exceeding `x`, and whether it
    /// equals `x`. Requires `x` in `[0, 1]`.
    pub fn truncate(x: f64, depth: u32) -> (Self, bool) {
        assert!((0.0..=1.0).contains(&x), "point {x} outside [0, 1]");
        if x == 1.0 {
            return (Self::one(), true);
        }
        let mut digits = Vec::with_capacity(depth as usize);
        let mut rest = x;
        for _ in 0..depth {
            // doubling is exact in binary floating point
            rest *= 2.0;
            if rest >= 1.0 {
                digits.push(Digit::One);
                rest -= 1.0;
            } else {
                digits.push(Digit::Zero);
            }
            if rest == 0.0 {
                break;
            }
        }
        (Self::from_digits(digits), rest == 0.0)
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn has_ones_tail(&self) -> bool {
        self.ones_tail
    }

    pub fn is_one(&self) -> bool {
        self.digits.is_empty() && self.ones_tail
    }

    /// The shift `T`: drop the first digit. `1 = 0.111...` is fixed.
    pub fn shift(&self) -> Self {
        if self.digits.is_empty() {
            return self.clone();
        }
        Self {
            digits: self.digits[1..].to_vec(),
            ones_tail: self.ones_tail,
        }
    }

    pub fn first_digit(&self) -> Option<Digit> {
        match self.digits.first() {
            Some(&d) => Some(d),
            None if self.ones_tail => Some(Digit::One),
            None => None,
        }
    }

    /// Value as `f64` (exact for up to 53 significant digits).
    pub fn value(&self) -> f64 {
        let mut v = 0.0;
        let mut w = 0.5;
        for d in &self.digits {
            if *d == Digit::One {
                v += w;
            }
            w *= 0.5;
        }
        if self.ones_tail {
            v += 2.0 * w;
        }
        v
    }
}

impl fmt::Display for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "ONE");
        }
        write!(f, "0.")?;
        for d in &self.digits {
            write!(f, "{}", d.bit())?;
        }
        if self.ones_tail {
            write!(f, "(1)")?;
        }
        Ok(())
    }
}
