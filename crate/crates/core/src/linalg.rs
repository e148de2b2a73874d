//! Small dense linear algebra over [`Scalar`], plus a banded Cholesky solver
//! for the symmetric positive definite Toeplitz systems used by projections.

use std::fmt;

use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| crate::scalar::dot(self.row(i), v))
            .collect()
    }

    /// `self^T v` without materializing the transpose.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o = o.clone() + a.clone() * vi.clone();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(T::zero(), |acc, k| {
                acc + self[(i, k)].clone() * other[(k, j)].clone()
            })
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }

    /// Copy of the block starting at `(r0, c0)` with the given shape.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| crate::scalar::sum(self.row(i))).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Display> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| self.data[i * self.cols + j].to_string())
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Basis of the right null space of `m`, via reduced row echelon form.
///
/// In floating mode a pivot is treated as zero when its magnitude is below
/// `rel_tol` times the largest entry of `m`.
pub fn null_space<T: Scalar>(m: &Matrix<T>, rel_tol: f64) -> Vec<Vec<T>> {
    let (rows, cols) = (m.rows(), m.cols());
    let scale = m.max_abs().max(1.0);
    let mut a = m.clone();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, mag) = (r..rows)
            .map(|i| (i, a[(i, c)].magnitude()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if a[(best, c)].is_negligible(scale, rel_tol) || mag <= 0.0 {
            continue;
        }
        for j in 0..cols {
            let tmp = a[(r, j)].clone();
            a[(r, j)] = a[(best, j)].clone();
            a[(best, j)] = tmp;
        }
        let p = a[(r, c)].clone();
        for j in 0..cols {
            a[(r, j)] = a[(r, j)].clone() / p.clone();
        }
        for i in 0..rows {
            if i == r || a[(i, c)].is_zero() {
                continue;
            }
            let f = a[(i, c)].clone();
            for j in 0..cols {
                a[(i, j)] = a[(i, j)].clone() - f.clone() * a[(r, j)].clone();
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![T::zero(); cols];
            v[fc] = T::one();
            for (pr, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = -a[(pr, fc)].clone();
            }
            v
        })
        .collect()
}

/// Symmetric positive definite banded matrix in lower band storage:
/// `band[i][d]` holds entry `(i, i - d)` for `d <= bandwidth`.
#[derive(Clone, Debug)]
pub struct BandedSpd {
    n: usize,
    bandwidth: usize,
    band: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("matrix is not positive definite (pivot {pivot} at row {row})")]
pub struct NotPositiveDefinite {
    pub row: usize,
    pub pivot: f64,
}

impl BandedSpd {
    /// Symmetric Toeplitz matrix of order `n` with first column `symbol[0..]`.
    pub fn toeplitz(n: usize, symbol: &[f64]) -> Self {
        let bandwidth = symbol.len().saturating_sub(1);
        let band = (0..n)
            .map(|i| (0..=bandwidth.min(i)).map(|d| symbol[d]).collect())
            .collect();
        Self { n, bandwidth, band }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn shifted(&self, t: f64) -> Self {
        let mut s = self.clone();
        for row in &mut s.band {
            row[0] -= t;
        }
        s
    }

    /// In-place banded Cholesky factorization `L L^T`.
    pub fn factor(&self) -> Result<BandedCholesky, NotPositiveDefinite> {
        let (n, w) = (self.n, self.bandwidth);
        let mut l = self.band.clone();
        for i in 0..n {
            for d in (0..=w.min(i)).rev() {
                let j = i - d;
                // s = A[i][j] - sum_{k < j, k >= i - w} L[i][k] L[j][k]
                let mut s = l[i][d];
                let kmin = i.saturating_sub(w);
                for k in kmin..j {
                    s -= l[i][i - k] * l[j][j - k];
                }
                if d == 0 {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(NotPositiveDefinite { row: i, pivot: s });
                    }
                    l[i][0] = s.sqrt();
                } else {
                    l[i][d] = s / l[j][0];
                }
            }
        }
        Ok(BandedCholesky { n, bandwidth: w, l })
    }

    /// Smallest eigenvalue by bisection on Cholesky success of `A - tI`.
    pub fn min_eigenvalue(&self) -> f64 {
        // Gershgorin interval
        let radius: f64 = self.band[self.n - 1].iter().skip(1).map(|x| x.abs()).sum::<f64>() * 2.0;
        let diag = self.band[0][0];
        let (mut lo, mut hi) = (diag - radius - 1.0, diag + radius + 1.0);
        for row in &self.band {
            lo = lo.min(row[0] - 2.0 * row.iter().skip(1).map(|x| x.abs()).sum::<f64>() - 1.0);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.shifted(mid).factor().is_ok() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    l: Vec<Vec<f64>>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let w = self.bandwidth;
        let mut y = b.to_vec();
        for i in 0..self.n {
            let mut s = y[i];
            for k in i.saturating_sub(w)..i {
                s -= self.l[i][i - k] * y[k];
            }
            y[i] = s / self.l[i][0];
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for k in (i + 1)..self.n.min(i + w + 1) {
                s -= self.l[k][k - i] * y[k];
            }
            y[i] = s / self.l[i][0];
        }
        y
    }
}
