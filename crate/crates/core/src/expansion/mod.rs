//! Multiresolution expansions `f_j = P_j f` over the translates
//! `phi(2^j x - k)`, their square function and maximal function.
//!
//! Coefficients are stored in the unnormalized basis, so
//! `f_j(x) = sum_k a_{j,k} phi(2^j x - k)` and the refinement step is
//! `a_{j+1,l} = sum_k a_{j,k} p_{l - 2k}`.
//!
//! Everything lives on a window `D = [-margin, 1 + margin]`. Level `j` uses
//! the translates whose support lies inside `D`; these spaces are nested.
//! Inner products are composite midpoint sums at a fixed quadrature
//! resolution `R`, and the Gram system uses the same sums, so `P_j` is an
//! orthogonal projection for that discrete inner product.

mod functions;
mod gramian;
mod square;

use serde::Serialize;
use thiserror::Error;

use crate::eval::Evaluator;
use crate::linalg::{BandedSpd, NotPositiveDefinite};
use crate::mask::Mask;
use crate::two_scale::build_two_scale;

pub use functions::TestFunction;
pub use gramian::{gramian, Gramian};
pub use square::{equivalence_report, square_function, EquivalenceReport, SquareFunction, ThresholdRow};

/// Quadrature resolution must exceed the top level by at least this much.
pub const MIN_QUADRATURE_GAP: u32 = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpansionError {
    #[error("quadrature resolution {got} is below the required {needed}")]
    ResolutionTooCoarse { needed: u32, got: u32 },
    #[error("Gram matrix is not positive definite: {0}")]
    SingularGramian(NotPositiveDefinite),
    #[error("eigenvalue 1 of the autocorrelation operator has multiplicity {multiplicity}")]
    NonSimpleEigenvalue { multiplicity: usize },
    #[error("level {level} is not the projection of level {next}: deviation {deviation:e} > {tolerance:e}", next = level + 1)]
    InconsistentSequence {
        level: u32,
        deviation: f64,
        tolerance: f64,
    },
    #[error("no translate fits inside the window at level {0}")]
    EmptyIndexSet(u32),
    #[error("sequence needs at least {0} levels")]
    TooFewLevels(u32),
    #[error("{0}")]
    Setup(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionConfig {
    /// Top level `J`; levels run `0..=J`.
    pub levels: u32,
    /// Quadrature resolution `R`.
    pub quadrature_resolution: u32,
    /// Resolution `L` of the evaluation grid on `[0, 1]`.
    pub eval_resolution: u32,
    /// Window is `[-margin, 1 + margin]`.
    pub margin: i64,
}

impl ExpansionConfig {
    pub fn new(levels: u32, mask: &Mask) -> Self {
        Self {
            levels,
            quadrature_resolution: levels + MIN_QUADRATURE_GAP,
            eval_resolution: levels + 2,
            margin: mask.support() as i64,
        }
    }
}

/// Coefficients `a_{j,k}` for `k = first, first + 1, ...`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCoeffs {
    pub level: u32,
    pub first: i64,
    pub values: Vec<f64>,
}

impl LevelCoeffs {
    pub fn get(&self, k: i64) -> f64 {
        let i = k - self.first;
        if i < 0 || i as usize >= self.values.len() {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    pub fn max_abs_diff(&self, other: &LevelCoeffs) -> f64 {
        assert_eq!(self.first, other.first);
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A mask prepared for projections on a window.
pub struct Mra {
    mask: Mask,
    evaluator: Evaluator<f64>,
    config: ExpansionConfig,
}

impl Mra {
    pub fn new(mask: &Mask, config: ExpansionConfig) -> Result<Self, ExpansionError> {
        let needed = config.levels + MIN_QUADRATURE_GAP;
        if config.quadrature_resolution < needed {
            return Err(ExpansionError::ResolutionTooCoarse {
                needed,
                got: config.quadrature_resolution,
            });
        }
        let pair = build_two_scale(mask).map_err(|e| ExpansionError::Setup(e.to_string()))?;
        let evaluator = Evaluator::new(pair).map_err(|e| ExpansionError::Setup(e.to_string()))?;
        Ok(Self {
            mask: mask.clone(),
            evaluator,
            config,
        })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn config(&self) -> &ExpansionConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.mask.support()
    }

    fn lo(&self) -> i64 {
        -self.config.margin
    }

    fn hi(&self) -> i64 {
        1 + self.config.margin
    }

    /// Translates at level `j` whose support `[k, k + N] 2^-j` lies in the
    /// window: `first..first + count`.
    pub fn index_range(&self, level: u32) -> (i64, usize) {
        let scale = 1i64 << level;
        let first = self.lo() * scale;
        let last = self.hi() * scale - self.n() as i64;
        (first, (last - first + 1).max(0) as usize)
    }

    /// Midpoints of the quadrature cells covering the window.
    pub fn quadrature_points(&self) -> Vec<f64> {
        let r = self.config.quadrature_resolution;
        let h = (-(r as f64)).exp2();
        let count = ((self.hi() - self.lo()) as usize) << r;
        (0..count)
            .map(|i| self.lo() as f64 + (i as f64 + 0.5) * h)
            .collect()
    }

    pub fn sample(&self, f: &(dyn Fn(f64) -> f64 + Sync)) -> Vec<f64> {
        self.quadrature_points().into_iter().map(f).collect()
    }

    /// `phi` at the midpoints `(t + 1/2) 2^-m`, `t = 0..N 2^m`.
    fn phi_midpoints(&self, m: u32) -> Vec<f64> {
        let s = self.evaluator.samples(m + 1);
        s.iter().skip(1).step_by(2).copied().collect()
    }

    /// Discrete autocorrelation `2^-s sum_t phi(y_t) phi(y_t + m)` over the
    /// level-`s` midpoints `y_t`.
    pub fn discrete_gramian(&self, s: u32) -> Gramian {
        let phi = self.phi_midpoints(s);
        let per = 1usize << s;
        let h = (-(s as f64)).exp2();
        let values = (0..self.n())
            .map(|m| {
                let shift = m * per;
                h * phi
                    .iter()
                    .zip(phi.iter().skip(shift))
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect();
        Gramian::from_symbol(values)
    }

    fn level_system(&self, level: u32) -> Result<(BandedSpd, Gramian), ExpansionError> {
        let (_, count) = self.index_range(level);
        if count == 0 {
            return Err(ExpansionError::EmptyIndexSet(level));
        }
        let s = self.config.quadrature_resolution - level;
        let g = self.discrete_gramian(s);
        let scale = (-(level as f64)).exp2();
        let symbol: Vec<f64> = g.symbol().iter().map(|x| x * scale).collect();
        Ok((BandedSpd::toeplitz(count, &symbol), g))
    }

    /// Inner products of quadrature samples with every level-`j` translate.
    pub fn moments(&self, samples: &[f64], level: u32) -> Result<LevelCoeffs, ExpansionError> {
        let r = self.config.quadrature_resolution;
        assert_eq!(samples.len(), ((self.hi() - self.lo()) as usize) << r);
        let (first, count) = self.index_range(level);
        if count == 0 {
            return Err(ExpansionError::EmptyIndexSet(level));
        }
        let s = r - level;
        let phi = self.phi_midpoints(s);
        let h = (-(r as f64)).exp2();
        let stride = 1usize << s;
        let values = (0..count)
            .map(|i| {
                let off = i * stride;
                h * samples[off..off + phi.len()]
                    .iter()
                    .zip(&phi)
                    .map(|(f, p)| f * p)
                    .sum::<f64>()
            })
            .collect();
        Ok(LevelCoeffs { level, first, values })
    }

    /// Coefficients of `P_j f` from samples on the quadrature grid.
    pub fn project_samples(&self, samples: &[f64], level: u32) -> Result<LevelCoeffs, ExpansionError> {
        let b = self.moments(samples, level)?;
        let (system, _) = self.level_system(level)?;
        let chol = system.factor().map_err(ExpansionError::SingularGramian)?;
        Ok(LevelCoeffs {
            level,
            first: b.first,
            values: chol.solve(&b.values),
        })
    }

    pub fn project(
        &self,
        f: &(dyn Fn(f64) -> f64 + Sync),
        level: u32,
    ) -> Result<LevelCoeffs, ExpansionError> {
        self.project_samples(&self.sample(f), level)
    }

    /// `a_{j+1}` representing the same function as `a_j`.
    pub fn refine(&self, coeffs: &LevelCoeffs) -> LevelCoeffs {
        let p = self.mask.coeffs();
        let (first, count) = self.index_range(coeffs.level + 1);
        debug_assert_eq!(first, 2 * coeffs.first);
        let mut values = vec![0.0; count];
        for (i, a) in coeffs.values.iter().enumerate() {
            for (t, pt) in p.iter().enumerate() {
                values[2 * i + t] += a * pt;
            }
        }
        LevelCoeffs {
            level: coeffs.level + 1,
            first,
            values,
        }
    }

    /// `P_j` applied to a level-`j+1` expansion, in coefficient space.
    pub fn coarsen(&self, fine: &LevelCoeffs) -> Result<LevelCoeffs, ExpansionError> {
        let j = fine.level - 1;
        let (_, g) = self.level_system(fine.level)?;
        let scale = (-(fine.level as f64)).exp2();
        let n = self.n() as i64;
        // G_{j+1} a_{j+1}
        let ga: Vec<f64> = (0..fine.values.len() as i64)
            .map(|l| {
                (-(n - 1)..n)
                    .map(|m| {
                        let idx = l + m;
                        if idx < 0 || idx as usize >= fine.values.len() {
                            0.0
                        } else {
                            g.get(m) * fine.values[idx as usize]
                        }
                    })
                    .sum::<f64>()
                    * scale
            })
            .collect();
        let p = self.mask.coeffs();
        let (first, count) = self.index_range(j);
        let b: Vec<f64> = (0..count)
            .map(|k| p.iter().enumerate().map(|(i, pi)| pi * ga[2 * k + i]).sum())
            .collect();
        let (system, _) = self.level_system(j)?;
        let chol = system.factor().map_err(ExpansionError::SingularGramian)?;
        Ok(LevelCoeffs {
            level: j,
            first,
            values: chol.solve(&b),
        })
    }

    /// `f_j` at the midpoints `start + (i + 1/2) 2^-m`, `i < count`.
    pub fn evaluate(&self, coeffs: &LevelCoeffs, start: i64, m: u32, count: usize) -> Vec<f64> {
        let j = coeffs.level;
        assert!(m >= j, "evaluation grid coarser than the level");
        let d = m - j;
        // phi at level d + 1 nodes; midpoint i sits at node 2i + 1
        let phi = self.evaluator.samples(d + 1);
        let per = 1i64 << (d + 1);
        let n = self.n() as i64;
        (0..count as i64)
            .map(|i| {
                // 2^j x = start 2^j + (2i + 1) / 2^(d+1)
                let node = start * (1i64 << j) * per + 2 * i + 1;
                let cell = node.div_euclid(per);
                (cell - n + 1..=cell)
                    .map(|k| {
                        let u = node - k * per;
                        if u <= 0 || u >= n * per {
                            0.0
                        } else {
                            coeffs.get(k) * phi[u as usize]
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// `f_j` at the midpoints of the level-`L` cells of `[0, 1]`.
    pub fn evaluate_unit(&self, coeffs: &LevelCoeffs) -> Vec<f64> {
        let l = self.config.eval_resolution;
        self.evaluate(coeffs, 0, l, 1usize << l)
    }

    /// `f_j` on the quadrature grid of the window.
    pub fn evaluate_quadrature(&self, coeffs: &LevelCoeffs) -> Vec<f64> {
        let r = self.config.quadrature_resolution;
        let count = ((self.hi() - self.lo()) as usize) << r;
        self.evaluate(coeffs, self.lo(), r, count)
    }

    /// A sample-norm scale for tolerances: `max |f|` on the quadrature grid.
    pub fn quadrature_tolerance(&self, samples: &[f64]) -> f64 {
        let sup = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let gap = self.config.quadrature_resolution - self.config.levels;
        sup.max(1.0) * (-(gap as f64)).exp2()
    }
}

/// Levels `f_0..f_J` of an expansion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionSequence {
    pub mask: String,
    pub config: ExpansionConfig,
    pub levels: Vec<LevelCoeffs>,
    /// Consistency tolerance for `P_j f_{j+1} = f_j`.
    pub tolerance: f64,
}

impl ExpansionSequence {
    /// `f_j = P_j f` for every level.
    pub fn project(mra: &Mra, f: &(dyn Fn(f64) -> f64 + Sync)) -> Result<Self, ExpansionError> {
        let samples = mra.sample(f);
        let levels = (0..=mra.config.levels)
            .map(|j| mra.project_samples(&samples, j))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            mask: mra.mask.name().to_string(),
            config: mra.config.clone(),
            levels,
            tolerance: mra.quadrature_tolerance(&samples),
        })
    }

    /// Constant sequence `f_j = f_0` for `f_0` in `V_0`.
    pub fn stationary(mra: &Mra, base: LevelCoeffs) -> Self {
        assert_eq!(base.level, 0);
        let mut levels = vec![base];
        for _ in 0..mra.config.levels {
            let next = mra.refine(levels.last().unwrap());
            levels.push(next);
        }
        let sup = levels[0].values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let gap = mra.config.quadrature_resolution - mra.config.levels;
        Self {
            mask: mra.mask.name().to_string(),
            config: mra.config.clone(),
            levels,
            tolerance: sup.max(1.0) * (-(gap as f64)).exp2(),
        }
    }

    pub fn top(&self) -> u32 {
        self.config.levels
    }

    /// Largest deviation `|P_j f_{j+1} - f_j|` in coefficients, per level.
    pub fn consistency(&self, mra: &Mra) -> Result<Vec<f64>, ExpansionError> {
        self.levels
            .windows(2)
            .map(|w| Ok(mra.coarsen(&w[1])?.max_abs_diff(&w[0])))
            .collect()
    }

    pub fn check_consistent(&self, mra: &Mra) -> Result<(), ExpansionError> {
        for (j, dev) in self.consistency(mra)?.into_iter().enumerate() {
            if !(dev <= self.tolerance) {
                return Err(ExpansionError::InconsistentSequence {
                    level: j as u32,
                    deviation: dev,
                    tolerance: self.tolerance,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{builtin_mask, Family};

    fn hat() -> Mask {
        builtin_mask(Family::Bspline, 2).unwrap()
    }

    fn hat_fn(x: f64) -> f64 {
        if (0.0..=1.0).contains(&x) {
            x
        } else if (1.0..=2.0).contains(&x) {
            2.0 - x
        } else {
            0.0
        }
    }

    #[test]
    fn projecting_phi_gives_unit_coefficient() {
        let m = hat();
        let mra = Mra::new(&m, ExpansionConfig::new(2, &m)).unwrap();
        let a = mra.project(&hat_fn, 0).unwrap();
        for k in a.first..a.first + a.values.len() as i64 {
            let want = if k == 0 { 1.0 } else { 0.0 };
            assert!((a.get(k) - want).abs() <= 1e-8, "k={k} a={}", a.get(k));
        }
    }

    #[test]
    fn constants_reproduced_in_the_interior() {
        let m = hat();
        let mut cfg = ExpansionConfig::new(0, &m);
        cfg.margin = 20;
        let mra = Mra::new(&m, cfg).unwrap();
        let a = mra.project(&|_| 1.0, 0).unwrap();
        for k in -4..=4 {
            assert!((a.get(k) - 1.0).abs() <= 1e-6, "k={k} a={}", a.get(k));
        }
    }

    #[test]
    fn phi_lies_in_v1() {
        let m = hat();
        let mra = Mra::new(&m, ExpansionConfig::new(1, &m)).unwrap();
        let a = mra.project(&hat_fn, 1).unwrap();
        let vals = mra.evaluate_quadrature(&a);
        let pts = mra.quadrature_points();
        let err = vals
            .iter()
            .zip(&pts)
            .map(|(v, x)| (v - hat_fn(*x)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn refinement_preserves_values() {
        let m = builtin_mask(Family::Daubechies, 2).unwrap();
        let mra = Mra::new(&m, ExpansionConfig::new(3, &m)).unwrap();
        let a0 = mra
            .project(&|x: f64| (3.0 * x).sin() * (-x * x).exp(), 0)
            .unwrap();
        let a1 = mra.refine(&a0);
        let v0 = mra.evaluate_unit(&a0);
        let v1 = mra.evaluate_unit(&a1);
        for (x, y) in v0.iter().zip(&v1) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn coarsen_matches_sampled_projection() {
        let m = builtin_mask(Family::Bspline, 3).unwrap();
        let mra = Mra::new(&m, ExpansionConfig::new(4, &m)).unwrap();
        let f = |x: f64| if x < 0.4 { x * x } else { 0.3 - x };
        let fine = mra.project(&f, 3).unwrap();
        let via_samples = mra.project_samples(&mra.evaluate_quadrature(&fine), 2).unwrap();
        let via_coeffs = mra.coarsen(&fine).unwrap();
        assert!(via_samples.max_abs_diff(&via_coeffs) < 1e-10);
    }

    #[test]
    fn coarse_quadrature_rejected() {
        let m = hat();
        let mut cfg = ExpansionConfig::new(8, &m);
        cfg.quadrature_resolution = 10;
        assert!(matches!(
            Mra::new(&m, cfg),
            Err(ExpansionError::ResolutionTooCoarse { needed: 14, got: 10 })
        ));
    }
}
