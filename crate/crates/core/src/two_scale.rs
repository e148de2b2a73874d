//! The two-scale matrices `P0`, `P1` and their shared inner block `P`.
//!
//! For `x` in `[0, 1]` and `Phi(x) = (phi(x), ..., phi(x + N - 1))` the
//! dilation equation gives `Phi(x) = P_e^T Phi(2x - e)` on the half where the
//! first binary digit of `x` is `e`. Entry-wise
//! `(P0)_{m,k} = p_{2k-m}` and `(P1)_{m,k} = p_{2k-m+1}`.
//!
//! The matrices are built twice: once from the entry formula and once from
//! the row-by-row block recipe (odd/even coefficient rows with cyclic
//! shifts, then bordered by `p_t`, `p_b`, `p_0`, `p_N`). Construction fails
//! unless both routes agree entry for entry.

use thiserror::Error;

use crate::linalg::Matrix;
use crate::mask::Mask;
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum TwoScaleError {
    #[error("support N = {0} is too small for two-scale matrices (need N >= 2)")]
    DegenerateN(usize),
    #[error("mask {0:?} has no exact coefficients")]
    NotExact(String),
    #[error("block recipe rotated a nonzero entry out of row {row}")]
    RecipeOverflow { row: usize },
    #[error("block recipe and entry formula disagree at {matrix}[{m}][{k}]")]
    RouteMismatch {
        matrix: &'static str,
        m: usize,
        k: usize,
    },
}

/// A binary digit selecting `P0` or `P1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Digit {
    Zero = 0,
    One = 1,
}

impl Digit {
    pub fn from_bit(b: u8) -> Self {
        if b == 0 {
            Digit::Zero
        } else {
            Digit::One
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoScalePair<T: Scalar> {
    coeffs: Vec<T>,
    p0: Matrix<T>,
    p1: Matrix<T>,
    inner: Matrix<T>,
}

fn coeff<T: Scalar>(p: &[T], j: i64) -> T {
    if j < 0 || j as usize >= p.len() {
        T::zero()
    } else {
        p[j as usize].clone()
    }
}

impl<T: Scalar> TwoScalePair<T> {
    /// Builds the pair by both routes and checks that they agree.
    pub fn from_coeffs(p: &[T]) -> Result<Self, TwoScaleError> {
        let by_formula = Self::by_entry_formula(p)?;
        let by_recipe = Self::by_block_recipe(p)?;
        for (name, a, b) in [
            ("P0", &by_formula.p0, &by_recipe.p0),
            ("P1", &by_formula.p1, &by_recipe.p1),
        ] {
            for m in 0..a.rows() {
                for k in 0..a.cols() {
                    if a[(m, k)] != b[(m, k)] {
                        return Err(TwoScaleError::RouteMismatch { matrix: name, m, k });
                    }
                }
            }
        }
        Ok(by_formula)
    }

    pub fn by_entry_formula(p: &[T]) -> Result<Self, TwoScaleError> {
        let n = p.len().saturating_sub(1);
        if n < 2 {
            return Err(TwoScaleError::DegenerateN(n));
        }
        let p0 = Matrix::from_fn(n, n, |m, k| coeff(p, 2 * k as i64 - m as i64));
        let p1 = Matrix::from_fn(n, n, |m, k| coeff(p, 2 * k as i64 - m as i64 + 1));
        let inner = p0.block(1, 1, n - 1, n - 1);
        Ok(Self {
            coeffs: p.to_vec(),
            p0,
            p1,
            inner,
        })
    }

    /// Row recipe: first row odd coefficients, second row even ones, each
    /// later row the row two above it rotated one place to the right.
    pub fn by_block_recipe(p: &[T]) -> Result<Self, TwoScaleError> {
        let n = p.len().saturating_sub(1);
        if n < 2 {
            return Err(TwoScaleError::DegenerateN(n));
        }
        let width = n - 1;
        let padded = |vals: Vec<T>| -> Vec<T> {
            let mut row = vals;
            row.resize(width, T::zero());
            row
        };
        let odd: Vec<T> = p.iter().skip(1).step_by(2).cloned().collect();
        let even: Vec<T> = p.iter().step_by(2).cloned().collect();
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(width);
        for i in 0..width {
            let row = match i {
                0 => {
                    if odd.len() > width {
                        return Err(TwoScaleError::RecipeOverflow { row: 0 });
                    }
                    padded(odd.clone())
                }
                1 => {
                    if even.len() > width {
                        return Err(TwoScaleError::RecipeOverflow { row: 1 });
                    }
                    padded(even.clone())
                }
                _ => {
                    let mut r = rows[i - 2].clone();
                    if !r[width - 1].is_zero() {
                        return Err(TwoScaleError::RecipeOverflow { row: i });
                    }
                    r.rotate_right(1);
                    r
                }
            };
            rows.push(row);
        }
        let inner = Matrix::from_rows(rows);

        // p_t: even coefficients from p_2 on, zero padded to N - 1
        let p_t = padded(p.iter().skip(2).step_by(2).cloned().collect());
        // p_b: zeros, then coefficients with the parity of N, ending at p_{N-2}
        let tail: Vec<T> = (0..=n - 2)
            .filter(|j| (n - j).is_multiple_of(2))
            .map(|j| p[j].clone())
            .collect();
        let mut p_b = vec![T::zero(); width - tail.len()];
        p_b.extend(tail);

        let p0 = Matrix::from_fn(n, n, |m, k| match (m, k) {
            (0, 0) => p[0].clone(),
            (0, k) => p_t[k - 1].clone(),
            (_, 0) => T::zero(),
            (m, k) => inner[(m - 1, k - 1)].clone(),
        });
        let p1 = Matrix::from_fn(n, n, |m, k| {
            if m < width && k < width {
                inner[(m, k)].clone()
            } else if m < width {
                T::zero()
            } else if k < width {
                p_b[k].clone()
            } else {
                p[n].clone()
            }
        });
        Ok(Self {
            coeffs: p.to_vec(),
            p0,
            p1,
            inner,
        })
    }

    /// `N`, the support length of `phi` and the order of `P0`, `P1`.
    pub fn n(&self) -> usize {
        self.p0.rows()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn p0(&self) -> &Matrix<T> {
        &self.p0
    }

    pub fn p1(&self) -> &Matrix<T> {
        &self.p1
    }

    /// The `(N-1) x (N-1)` block shared by `P0` (lower right) and `P1` (upper left).
    pub fn inner(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn matrix(&self, d: Digit) -> &Matrix<T> {
        match d {
            Digit::Zero => &self.p0,
            Digit::One => &self.p1,
        }
    }

    /// `P_{e_m} ... P_{e_1} c`: later digits multiply on the left.
    pub fn apply_word(&self, word: &[Digit], c: &[T]) -> Vec<T> {
        word.iter().fold(c.to_vec(), |v, &d| self.matrix(d).mul_vec(&v))
    }

    /// Floating copy of an exact pair.
    pub fn to_f64(&self) -> TwoScalePair<f64> {
        TwoScalePair {
            coeffs: self.coeffs.iter().map(Scalar::to_f64).collect(),
            p0: self.p0.map(Scalar::to_f64),
            p1: self.p1.map(Scalar::to_f64),
            inner: self.inner.map(Scalar::to_f64),
        }
    }
}

/// Floating-point two-scale pair of a validated mask.
pub fn build_two_scale(mask: &Mask) -> Result<TwoScalePair<f64>, TwoScaleError> {
    TwoScalePair::from_coeffs(mask.coeffs())
}

/// Exact pair; only available for masks with rational coefficients.
pub fn build_two_scale_exact(mask: &Mask) -> Result<TwoScalePair<Rational>, TwoScaleError> {
    let ex = mask
        .exact_coeffs()
        .ok_or_else(|| TwoScaleError::NotExact(mask.name().to_string()))?;
    TwoScalePair::from_coeffs(ex)
}
