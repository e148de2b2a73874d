//! Small grammar of test functions: `jump:c`, `tent:c`, `sin:k`,
//! `poly:a0,a1,...`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestFunction {
    /// Indicator of `[0, c)`.
    Jump { c: f64 },
    /// `max(0, 1 - |x - c|)`.
    Tent { c: f64 },
    /// `sin(2 pi k x)` on `[0, 1]`, zero elsewhere.
    Sin { k: f64 },
    /// `sum a_i x^i` on `[0, 1]`, zero elsewhere.
    Poly { coeffs: Vec<f64> },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        let unit = (0.0..=1.0).contains(&x);
        match self {
            TestFunction::Jump { c } => {
                if x >= 0.0 && x < *c {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Tent { c } => (1.0 - (x - c).abs()).max(0.0),
            TestFunction::Sin { k } if unit => (2.0 * PI * k * x).sin(),
            TestFunction::Poly { coeffs } if unit => coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a),
            _ => 0.0,
        }
    }
}

impl FromStr for TestFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| format!("test function {s:?} must look like kind:args"))?;
        let nums = args
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad number {t:?} in {s:?}"))
                    .and_then(|v| {
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(format!("non-finite number in {s:?}"))
                        }
                    })
            })
            .collect::<Result<Vec<f64>, String>>()?;
        let single = || -> Result<f64, String> {
            match nums.as_slice() {
                [v] => Ok(*v),
                _ => Err(format!("{kind} takes exactly one argument")),
            }
        };
        match kind.trim() {
            "jump" => Ok(TestFunction::Jump { c: single()? }),
            "tent" => Ok(TestFunction::Tent { c: single()? }),
            "sin" => Ok(TestFunction::Sin { k: single()? }),
            "poly" => Ok(TestFunction::Poly { coeffs: nums }),
            other => Err(format!("unknown test function {other:?}")),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Jump { c } => write!(f, "jump:{c}"),
            TestFunction::Tent { c } => write!(f, "tent:{c}"),
            TestFunction::Sin { k } => write!(f, "sin:{k}"),
            TestFunction::Poly { coeffs } => {
                let parts: Vec<String> = coeffs.iter().map(|a| a.to_string()).collect();
                write!(f, "poly:{}", parts.join(","))
            }
        }
    }
}
