//! Autocorrelations `g_k = int phi(x) phi(x + k) dx` of a refinable `phi`.

use serde::Serialize;

use crate::eval::EIGEN_RANK_TOL;
use crate::linalg::{null_space, BandedSpd, Matrix};
use crate::mask::Mask;

use super::ExpansionError;

/// `g_0, ..., g_{N-1}`; `g_{-k} = g_k` and `g_k = 0` for `|k| >= N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gramian {
    values: Vec<f64>,
    residual: f64,
}

impl Gramian {
    pub fn from_symbol(values: Vec<f64>) -> Self {
        Self {
            values,
            residual: 0.0,
        }
    }

    pub fn symbol(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: i64) -> f64 {
        self.values.get(k.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// `sum_k g_k` over all `k`, which is `(int phi)^2`.
    pub fn total(&self) -> f64 {
        self.values[0] + 2.0 * self.values[1..].iter().sum::<f64>()
    }

    /// `max |T g - g|` for the refinement operator that defines `g`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn toeplitz(&self, order: usize) -> BandedSpd {
        BandedSpd::toeplitz(order, &self.values)
    }

    /// Smallest eigenvalue of the Toeplitz section of the given order.
    pub fn min_eigenvalue(&self, order: usize) -> f64 {
        self.toeplitz(order).min_eigenvalue()
    }
}

/// Solves `g_k = 1/2 sum_{i,j} p_i p_j g_{2k+i-j}` with `sum g = 1`.
pub fn gramian(mask: &Mask) -> Result<Gramian, ExpansionError> {
    let p = mask.coeffs();
    let n = mask.support() as i64;
    let auto = |m: i64| -> f64 {
        (0..p.len() as i64)
            .filter(|&j| j + m >= 0 && ((j + m) as usize) < p.len())
            .map(|j| p[(j + m) as usize] * p[j as usize])
            .sum()
    };
    let size = (2 * n - 1) as usize;
    let t = Matrix::from_fn(size, size, |r, c| {
        let k = r as i64 - (n - 1);
        let l = c as i64 - (n - 1);
        0.5 * auto(l - 2 * k)
    });
    let shifted = t.sub(&Matrix::identity(size));
    let basis = null_space(&shifted, EIGEN_RANK_TOL);
    if basis.len() != 1 {
        return Err(ExpansionError::NonSimpleEigenvalue {
            multiplicity: basis.len(),
        });
    }
    let v = &basis[0];
    let total: f64 = v.iter().sum();
    if total.abs() < 1e-300 {
        return Err(ExpansionError::NonSimpleEigenvalue { multiplicity: 1 });
    }
    let g: Vec<f64> = v.iter().map(|x| x / total).collect();
    let tg = t.mul_vec(&g);
    let residual = tg.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mid = (n - 1) as usize;
    // average the two halves; they agree up to rounding
    let values = (0..n as usize).map(|k| 0.5 * (g[mid + k] + g[mid - k])).collect();
    Ok(Gramian { values, residual })
}
