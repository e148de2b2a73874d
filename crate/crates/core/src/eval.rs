//! Pointwise evaluation of `Phi(x) = (phi(x), phi(x+1), ..., phi(x+N-1))`.
//!
//! For a point with binary digits `e1 e2 ... em` the dilation equation gives
//!
//! ```text
//! Phi(x) = P_{e1}^T P_{e2}^T ... P_{em}^T Phi(T^m x)
//! ```
//!
//! so a coefficient vector transforms as `c . Phi(x) = (P_{em} ... P_{e1} c) . Phi(T^m x)`:
//! later digits multiply on the left. At dyadic points the recursion ends at
//! `Phi(0)`, the fixed vector of `P0^T`, which makes the value exact in
//! rational mode.

use rayon::prelude::*;
use thiserror::Error;

use crate::dyadic::DyadicPoint;
use crate::linalg::{null_space, Matrix};
use crate::mask::Mask;
use crate::scalar::{dot, Scalar};
use crate::two_scale::{Digit, TwoScalePair};

/// Relative rank tolerance for the eigenvector computation in float mode.
pub const EIGEN_RANK_TOL: f64 = 1e-9;
/// Default cap on the number of binary digits used for non-dyadic points.
pub const DEFAULT_DEPTH_CAP: u32 = 64;

const PARALLEL_TABLE_CHUNK: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("mask violates the sum rule; Phi(0) has no canonical normalization")]
    SumRuleRequired,
    #[error("1 is not an eigenvalue of P0^T")]
    NoUnitEigenvalue,
    #[error("eigenvalue 1 of P0^T is not simple (geometric multiplicity {geometric}, eigenvector sum zero: {jordan})")]
    NonSimpleEigenvalue { geometric: usize, jordan: bool },
    #[error("tolerance not reached at depth {depth}: radius {radius:e}")]
    ToleranceNotReached { depth: u32, radius: f64 },
    #[error("coefficient vector has {got} components, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0} outside [0, 1]")]
    OutOfRange(f64),
}

/// Values of `Phi` at a dyadic point.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiVector<T> {
    pub point: DyadicPoint,
    pub values: Vec<T>,
}

/// `Phi` at an arbitrary real point, as the midpoint of the values at the two
/// dyadic endpoints of the containing cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiEnclosure {
    pub x: f64,
    pub values: Vec<f64>,
    /// Half the largest componentwise spread between the two endpoints; zero
    /// when `x` itself is dyadic.
    pub radius: f64,
    pub depth: u32,
    pub exact: bool,
}

/// Fixed vector of `P0^T` normalized to sum one: the values `phi(0..N-1)`.
pub fn phi_at_integers<T: Scalar>(pair: &TwoScalePair<T>) -> Result<Vec<T>, EvalError> {
    let n = pair.n();
    let scale = 1.0;
    for s in pair.p0().row_sums().iter().chain(pair.p1().row_sums().iter()) {
        if !(s.clone() - T::one()).is_negligible(scale, 1e-12) {
            return Err(EvalError::SumRuleRequired);
        }
    }
    let shifted = pair.p0().transpose().sub(&Matrix::identity(n));
    let mut basis = null_space(&shifted, EIGEN_RANK_TOL);
    match basis.len() {
        0 => return Err(EvalError::NoUnitEigenvalue),
        1 => {}
        g => {
            return Err(EvalError::NonSimpleEigenvalue {
                geometric: g,
                jordan: false,
            })
        }
    }
    let v = basis.pop().expect("one basis vector");
    // rows of P0 sum to one, so the all-ones vector is the left eigenvector;
    // a zero sum means eigenvalue 1 sits in a Jordan block
    let total = crate::scalar::sum(&v);
    let vscale = crate::scalar::norm_l1(&v);
    if total.is_negligible(vscale, 1e-9) {
        return Err(EvalError::NonSimpleEigenvalue {
            geometric: 1,
            jordan: true,
        });
    }
    Ok(v.into_iter().map(|x| x / total.clone()).collect())
}

/// Evaluator bound to one two-scale pair.
#[derive(Clone, Debug)]
pub struct Evaluator<T: Scalar> {
    pair: TwoScalePair<T>,
    phi0: Vec<T>,
    phi1: Vec<T>,
}

impl<T: Scalar> Evaluator<T> {
    pub fn new(pair: TwoScalePair<T>) -> Result<Self, EvalError> {
        let phi0 = phi_at_integers(&pair)?;
        // Phi(1) = (phi(1), ..., phi(N-1), phi(N)) with phi(N) = 0
        let mut phi1: Vec<T> = phi0[1..].to_vec();
        phi1.push(T::zero());
        Ok(Self { pair, phi0, phi1 })
    }

    pub fn pair(&self) -> &TwoScalePair<T> {
        &self.pair
    }

    pub fn n(&self) -> usize {
        self.pair.n()
    }

    pub fn phi_zero(&self) -> &[T] {
        &self.phi0
    }

    pub fn phi_one(&self) -> &[T] {
        &self.phi1
    }

    /// One step of the recursion: `Phi(x) = P_e^T Phi(Tx)` where `e` is the
    /// first digit of `x`.
    pub fn step(&self, digit: Digit, phi_of_shift: &[T]) -> Vec<T> {
        self.pair.matrix(digit).tr_mul_vec(phi_of_shift)
    }

    /// Exact value of `Phi` at a dyadic point.
    pub fn at(&self, x: &DyadicPoint) -> PhiVector<T> {
        let start = if x.has_ones_tail() { &self.phi1 } else { &self.phi0 };
        let values = x
            .digits()
            .iter()
            .rev()
            .fold(start.clone(), |v, &d| self.step(d, &v));
        PhiVector {
            point: x.clone(),
            values,
        }
    }

    /// The displayed-order product `P_{e1}^T ... ` applied the other way
    /// round: `P_{em}^T ... P_{e1}^T Phi(0)`. Kept only to demonstrate that it
    /// does not reproduce `Phi`.
    pub fn at_reversed_order(&self, x: &DyadicPoint) -> Vec<T> {
        let start = if x.has_ones_tail() { &self.phi1 } else { &self.phi0 };
        x.digits().iter().fold(start.clone(), |v, &d| self.step(d, &v))
    }

    pub fn combination(&self, c: &[T], x: &DyadicPoint) -> Result<T, EvalError> {
        if c.len() != self.n() {
            return Err(EvalError::DimensionMismatch {
                expected: self.n(),
                got: c.len(),
            });
        }
        Ok(dot(c, &self.at(x).values))
    }

    /// `Phi(k / 2^level)` for `k = 0..=2^level`, built level by level.
    pub fn table(&self, level: u32) -> PhiTable<T> {
        let n = self.n();
        let mut data: Vec<T> = self.phi0.clone();
        for l in 1..=level {
            let half = 1usize << (l - 1);
            let mut next = Vec::with_capacity(2 * half * n);
            for d in [Digit::Zero, Digit::One] {
                if half >= PARALLEL_TABLE_CHUNK {
                    let parts: Vec<Vec<T>> =
                        data[..half * n].par_chunks(n).map(|v| self.step(d, v)).collect();
                    next.extend(parts.into_iter().flatten());
                } else {
                    for j in 0..half {
                        next.extend(self.step(d, &data[j * n..(j + 1) * n]));
                    }
                }
            }
            data = next;
        }
        data.extend(self.phi1.iter().cloned());
        PhiTable { level, n, data }
    }

    /// `phi(k / 2^level)` for `k = 0..=N * 2^level`.
    pub fn samples(&self, level: u32) -> Vec<T> {
        let table = self.table(level);
        let per = 1usize << level;
        let n = self.n();
        let mut out = Vec::with_capacity(n * per + 1);
        for i in 0..n {
            for k in 0..per {
                out.push(table.get(k)[i].clone());
            }
        }
        // phi(N) = Phi(1)_{N-1}
        out.push(table.get(per)[n - 1].clone());
        out
    }
}

impl Evaluator<f64> {
    /// `Phi(x)` for real `x`, refining until the endpoint spread is at most
    /// `tol` or the depth cap is hit.
    pub fn at_real(&self, x: f64, tol: f64, depth_cap: u32) -> Result<PhiEnclosure, EvalError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(EvalError::OutOfRange(x));
        }
        let mut last_radius = f64::INFINITY;
        for depth in 1..=depth_cap {
            let (lo, exact) = DyadicPoint::truncate(x, depth);
            let lo_vals = self.at(&lo).values;
            if exact {
                return Ok(PhiEnclosure {
                    x,
                    values: lo_vals,
                    radius: 0.0,
                    depth,
                    exact: true,
                });
            }
            let hi = upper_neighbor(&lo, depth);
            let hi_vals = self.at(&hi).values;
            let radius = lo_vals
                .iter()
                .zip(&hi_vals)
                .map(|(a, b)| 0.5 * (a - b).abs())
                .fold(0.0, f64::max);
            last_radius = radius;
            if radius <= tol {
                return Ok(PhiEnclosure {
                    x,
                    values: lo_vals.iter().zip(&hi_vals).map(|(a, b)| 0.5 * (a + b)).collect(),
                    radius,
                    depth,
                    exact: false,
                });
            }
        }
        Err(EvalError::ToleranceNotReached {
            depth: depth_cap,
            radius: last_radius,
        })
    }

    pub fn combination_real(
        &self,
        c: &[f64],
        x: f64,
        tol: f64,
        depth_cap: u32,
    ) -> Result<(f64, f64), EvalError> {
        if c.len() != self.n() {
            return Err(EvalError::DimensionMismatch {
                expected: self.n(),
                got: c.len(),
            });
        }
        let e = self.at_real(x, tol, depth_cap)?;
        let l1: f64 = c.iter().map(|v| v.abs()).sum();
        Ok((dot(c, &e.values), e.radius * l1))
    }
}

/// Next dyadic point of the given level above `lo`.
fn upper_neighbor(lo: &DyadicPoint, depth: u32) -> DyadicPoint {
    let mut bits: Vec<u8> = lo.digits().iter().map(|d| d.bit()).collect();
    bits.resize(depth as usize, 0);
    // binary increment
    for i in (0..bits.len()).rev() {
        if bits[i] == 0 {
            bits[i] = 1;
            return DyadicPoint::from_bits(&bits);
        }
        bits[i] = 0;
    }
    DyadicPoint::one()
}

/// Flat table of `Phi(k / 2^level)`, `k = 0..=2^level`.
#[derive(Clone, Debug)]
pub struct PhiTable<T> {
    level: u32,
    n: usize,
    data: Vec<T>,
}

impl<T> PhiTable<T> {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, k: usize) -> &[T] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.n)
    }
}

/// Cascade iteration `phi_{n+1}(x) = sum_k p_k phi_n(2x - k)` on the grid
/// `{j / 2^resolution : 0 <= j <= N 2^resolution}`.
///
/// The start is the piecewise-linear hat on `[0, 2]` (the box on `[0, 1]`
/// when `N = 1`), which has integral one.
pub fn cascade(mask: &Mask, iterations: usize, resolution: u32) -> Vec<f64> {
    let p = mask.coeffs();
    let n = mask.support();
    let per = 1usize << resolution;
    let len = n * per + 1;
    let h = 1.0 / per as f64;
    let mut phi: Vec<f64> = (0..len)
        .map(|j| {
            let x = j as f64 * h;
            if n == 1 {
                if x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (1.0 - (x - 1.0).abs()).max(0.0)
            }
        })
        .collect();
    for _ in 0..iterations {
        phi = (0..len)
            .into_par_iter()
            .map(|j| {
                // phi(2x - k) at grid index 2j - k * 2^r
                p.iter()
                    .enumerate()
                    .map(|(k, &pk)| {
                        let idx = 2 * j as i64 - (k * per) as i64;
                        if idx < 0 || idx as usize >= len {
                            0.0
                        } else {
                            pk * phi[idx as usize]
                        }
                    })
                    .sum()
            })
            .collect();
    }
    phi
}
