//! Dilation masks: validation, the built-in catalog and the text file format.
//!
//! A mask `p_0..p_N` defines the refinable function through
//! `phi(x) = sum_k p_k phi(2x - k)`, normalized so that `phi` integrates to
//! one, which forces `sum_k p_k = 2`. The equivalent form
//! `phi(x/2) = sum_k p_k phi(x - k)` describes the same function.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{parse_rational, Rational, Scalar};

/// Absolute tolerance for the floating-point normalization checks.
pub const FLOAT_SUM_TOL: f64 = 1e-12;

/// A single coefficient as supplied by the user.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Exact(Rational),
    Float(f64),
}

impl Coefficient {
    pub fn to_f64(&self) -> f64 {
        match self {
            Coefficient::Exact(r) => Scalar::to_f64(r),
            Coefficient::Float(x) => *x,
        }
    }
}

impl FromStr for Coefficient {
    type Err = String;

    /// `"a/b"` and integers parse exactly, anything else as `f64`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(r) = parse_rational(s) {
            return Ok(Coefficient::Exact(r));
        }
        s.trim()
            .parse::<f64>()
            .map(Coefficient::Float)
            .map_err(|_| format!("cannot parse coefficient {s:?}"))
    }
}

/// A violated (or merely suspicious) mask invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum MaskIssue {
    EmptyMask,
    /// Only one coefficient: the support degenerates to a point.
    DegenerateSupport,
    NonFinite {
        index: usize,
    },
    SumNotTwo {
        actual: f64,
    },
    ZeroEndpoint {
        index: usize,
    },
    /// Warning: `sum p_2k = sum p_2k+1 = 1` fails.
    SumRuleViolated {
        even: f64,
        odd: f64,
    },
    /// Warning: the refinable function is not continuous (Haar-type, N = 1).
    ContinuityNotGuaranteed,
}

impl MaskIssue {
    pub fn is_fatal(&self) -> bool {
        !matches!(
            self,
            MaskIssue::SumRuleViolated { .. } | MaskIssue::ContinuityNotGuaranteed
        )
    }
}

impl fmt::Display for MaskIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskIssue::EmptyMask => write!(f, "EmptyMask"),
            MaskIssue::DegenerateSupport => write!(f, "DegenerateSupport"),
            MaskIssue::NonFinite { index } => write!(f, "NonFinite({index})"),
            MaskIssue::SumNotTwo { actual } => write!(f, "SumNotTwo({actual})"),
            MaskIssue::ZeroEndpoint { index } => write!(f, "ZeroEndpoint({index})"),
            MaskIssue::SumRuleViolated { even, odd } => {
                write!(f, "SumRuleViolated(even={even}, odd={odd})")
            }
            MaskIssue::ContinuityNotGuaranteed => {
                write!(f, "ContinuityNotGuaranteed: continuity not guaranteed")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("invalid mask: {}", join_issues(.0))]
    Invalid(Vec<MaskIssue>),
    #[error("unsupported order {order} for family {family}")]
    UnsupportedOrder { family: Family, order: usize },
    #[error("unknown mask source {0:?}")]
    UnknownSource(String),
    #[error("mask file: {0}")]
    Format(String),
}

fn join_issues(issues: &[MaskIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Validated dilation mask.
///
/// Floating coefficients are always available; exact rational coefficients
/// are kept when every input coefficient was rational.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    name: String,
    coeffs: Vec<f64>,
    exact: Option<Vec<Rational>>,
    warnings: Vec<MaskIssue>,
}

impl Mask {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Support length: `phi` lives on `[0, N]`.
    pub fn support(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn exact_coeffs(&self) -> Option<&[Rational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn warnings(&self) -> &[MaskIssue] {
        &self.warnings
    }

    pub fn satisfies_sum_rule(&self) -> bool {
        !self
            .warnings
            .iter()
            .any(|w| matches!(w, MaskIssue::SumRuleViolated { .. }))
    }

    /// Sum rule holds and the support is long enough for a continuous `phi`.
    pub fn continuity_capable(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Checks the normalization invariants and builds a [`Mask`].
pub fn validate_mask(name: &str, raw: &[Coefficient]) -> Result<Mask, MaskError> {
    let mut issues = Vec::new();
    if raw.is_empty() {
        return Err(MaskError::Invalid(vec![MaskIssue::EmptyMask]));
    }
    for (i, c) in raw.iter().enumerate() {
        if !c.to_f64().is_finite() {
            issues.push(MaskIssue::NonFinite { index: i });
        }
    }
    if !issues.is_empty() {
        return Err(MaskError::Invalid(issues));
    }
    if raw.len() == 1 {
        issues.push(MaskIssue::DegenerateSupport);
    }

    let exact: Option<Vec<Rational>> = raw
        .iter()
        .map(|c| match c {
            Coefficient::Exact(r) => Some(r.clone()),
            Coefficient::Float(_) => None,
        })
        .collect();
    let floats: Vec<f64> = raw.iter().map(Coefficient::to_f64).collect();
    let n = raw.len() - 1;

    match &exact {
        Some(ex) => {
            let total = crate::scalar::sum(ex);
            if total != Rational::from_i64(2) {
                issues.push(MaskIssue::SumNotTwo {
                    actual: Scalar::to_f64(&total),
                });
            }
            for idx in [0, n] {
                if ex[idx].is_zero() && !issues.contains(&MaskIssue::ZeroEndpoint { index: idx }) {
                    issues.push(MaskIssue::ZeroEndpoint { index: idx });
                }
            }
            let even: Rational = ex.iter().step_by(2).cloned().sum();
            let odd: Rational = ex.iter().skip(1).step_by(2).cloned().sum();
            if !even.is_one() || !odd.is_one() {
                issues.push(MaskIssue::SumRuleViolated {
                    even: Scalar::to_f64(&even),
                    odd: Scalar::to_f64(&odd),
                });
            }
        }
        None => {
            let total: f64 = floats.iter().sum();
            if (total - 2.0).abs() > FLOAT_SUM_TOL {
                issues.push(MaskIssue::SumNotTwo { actual: total });
            }
            for idx in [0, n] {
                if floats[idx] == 0.0 && !issues.contains(&MaskIssue::ZeroEndpoint { index: idx }) {
                    issues.push(MaskIssue::ZeroEndpoint { index: idx });
                }
            }
            let even: f64 = floats.iter().step_by(2).sum();
            let odd: f64 = floats.iter().skip(1).step_by(2).sum();
            if (even - 1.0).abs() > FLOAT_SUM_TOL || (odd - 1.0).abs() > FLOAT_SUM_TOL {
                issues.push(MaskIssue::SumRuleViolated { even, odd });
            }
        }
    }
    if n == 1 {
        issues.push(MaskIssue::ContinuityNotGuaranteed);
    }

    if issues.iter().any(MaskIssue::is_fatal) {
        return Err(MaskError::Invalid(issues));
    }
    Ok(Mask {
        name: name.to_string(),
        coeffs: floats,
        exact,
        warnings: issues,
    })
}

/// Convenience wrapper for all-rational input given as `(numerator, denominator)`.
pub fn rational_mask(name: &str, coeffs: &[(i64, i64)]) -> Result<Mask, MaskError> {
    let raw: Vec<Coefficient> = coeffs
        .iter()
        .map(|&(a, b)| Coefficient::Exact(Rational::new(a.into(), b.into())))
        .collect();
    validate_mask(name, &raw)
}

pub fn float_mask(name: &str, coeffs: &[f64]) -> Result<Mask, MaskError> {
    let raw: Vec<Coefficient> = coeffs.iter().map(|&x| Coefficient::Float(x)).collect();
    validate_mask(name, &raw)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bspline,
    Daubechies,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Bspline => write!(f, "bspline"),
            Family::Daubechies => write!(f, "daubechies"),
        }
    }
}

/// Largest supported B-spline order; coefficients stay exact regardless.
pub const MAX_BSPLINE_ORDER: usize = 32;

/// Catalog mask of the given family.
///
/// `bspline` order `n` has `p_k = 2^(1-n) C(n, k)` on `[0, n]`. `daubechies`
/// order `M` (vanishing moments, 1..=5) is the minimum-phase filter of length
/// `2M` scaled to sum to 2.
pub fn builtin_mask(family: Family, order: usize) -> Result<Mask, MaskError> {
    match family {
        Family::Bspline => {
            if order == 0 || order > MAX_BSPLINE_ORDER {
                return Err(MaskError::UnsupportedOrder { family, order });
            }
            let denom = BigInt::one() << (order - 1);
            let mut binom = BigInt::one();
            let mut raw = Vec::with_capacity(order + 1);
            for k in 0..=order {
                raw.push(Coefficient::Exact(Rational::new(binom.clone(), denom.clone())));
                binom = binom * BigInt::from(order - k) / BigInt::from(k + 1);
            }
            validate_mask(&format!("bspline{order}"), &raw)
        }
        Family::Daubechies => {
            let coeffs: &[f64] = match order {
                1 => &DAUBECHIES_1,
                2 => &DAUBECHIES_2,
                3 => &DAUBECHIES_3,
                4 => &DAUBECHIES_4,
                5 => &DAUBECHIES_5,
                _ => return Err(MaskError::UnsupportedOrder { family, order }),
            };
            if order == 1 {
                // Haar is rational; keep it exact.
                return rational_mask("daubechies1", &[(1, 1), (1, 1)]);
            }
            float_mask(&format!("daubechies{order}"), coeffs)
        }
    }
}

/// Resolves `bspline3`, `daubechies2`, with or without a `builtin:` prefix.
pub fn builtin_by_name(name: &str) -> Result<Mask, MaskError> {
    let key = name.strip_prefix("builtin:").unwrap_or(name);
    let (family, digits) = if let Some(d) = key.strip_prefix("bspline") {
        (Family::Bspline, d)
    } else if let Some(d) = key.strip_prefix("daubechies") {
        (Family::Daubechies, d)
    } else if let Some(d) = key.strip_prefix("db") {
        (Family::Daubechies, d)
    } else {
        return Err(MaskError::UnknownSource(name.to_string()));
    };
    let order = digits
        .parse::<usize>()
        .map_err(|_| MaskError::UnknownSource(name.to_string()))?;
    builtin_mask(family, order)
}

/// Continuous catalog masks used throughout the test suites.
pub fn continuous_catalog() -> Vec<Mask> {
    let mut out = Vec::new();
    for n in 2..=5 {
        out.push(builtin_mask(Family::Bspline, n).expect("catalog bspline"));
    }
    for m in 2..=5 {
        out.push(builtin_mask(Family::Daubechies, m).expect("catalog daubechies"));
    }
    out
}

// Pinned by tools/pin_daubechies.py (60-digit spectral factorization).
const DAUBECHIES_1: [f64; 2] = [1.0, 1.0];
#[allow(clippy::excessive_precision)]
const DAUBECHIES_2: [f64; 4] = [
    6.830127018922193233819e-1,
    1.183012701892219323382,
    3.169872981077806766181e-1,
    -1.830127018922193233819e-1,
];
#[allow(clippy::excessive_precision)]
const DAUBECHIES_3: [f64; 6] = [
    4.704672077841636807533e-1,
    1.141116915831443625760,
    6.503650005262325285069e-1,
    -1.909344155683273615067e-1,
    -1.208322083103962092603e-1,
    4.981749973688373574653e-2,
];
#[allow(clippy::excessive_precision)]
const DAUBECHIES_4: [f64; 8] = [
    3.258034280512983482745e-1,
    1.010945715091828862883,
    8.922001382467596231717e-1,
    -3.957502623564464309536e-2,
    -2.645071673690397360517e-1,
    4.361630047417725265774e-2,
    4.650360107098176460550e-2,
    -1.498698933036147244511e-2,
];
#[allow(clippy::excessive_precision)]
const DAUBECHIES_5: [f64; 10] = [
    2.264189825835583576484e-1,
    8.539435427050283324470e-1,
    1.024326944259197073234,
    1.957669613478093480573e-1,
    -3.426567153829348864476e-1,
    -4.560113188354729748480e-2,
    1.097026586421336470442e-1,
    -8.826800108358254544295e-3,
    -1.779187010195419147950e-2,
    4.717427939067871524804e-3,
];

/// On-disk mask description (TOML):
///
/// ```toml
/// name = "hat"
/// N = 2
/// coeffs = ["1/2", "1", "1/2"]
/// ```
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MaskFile {
    pub name: String,
    #[serde(rename = "N")]
    pub support: usize,
    pub coeffs: Vec<String>,
}

impl MaskFile {
    pub fn parse(text: &str) -> Result<Self, MaskError> {
        toml::from_str(text).map_err(|e| MaskError::Format(e.message().to_string()))
    }

    pub fn to_mask(&self) -> Result<Mask, MaskError> {
        if self.coeffs.is_empty() {
            return Err(MaskError::Invalid(vec![MaskIssue::EmptyMask]));
        }
        if self.coeffs.len() != self.support + 1 {
            return Err(MaskError::Format(format!(
                "N = {} requires {} coefficients, found {}",
                self.support,
                self.support + 1,
                self.coeffs.len()
            )));
        }
        let raw = self
            .coeffs
            .iter()
            .map(|s| s.parse::<Coefficient>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(MaskError::Format)?;
        validate_mask(&self.name, &raw)
    }

    /// Rational coefficients are written as `a/b`; floats use the shortest
    /// representation that parses back to the same `f64`.
    pub fn from_mask(mask: &Mask) -> Self {
        let coeffs = match mask.exact_coeffs() {
            Some(ex) => ex.iter().map(ToString::to_string).collect(),
            None => mask.coeffs().iter().map(|x| format!("{x:?}")).collect(),
        };
        Self {
            name: mask.name().to_string(),
            support: mask.support(),
            coeffs,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("mask file serializes")
    }
}
