//! Square function `S_J^2 = f_0^2 + sum_{j<J} (f_{j+1} - f_j)^2`, maximal
//! function `f* = max_{j<=J} |f_j|`, and the finite-level comparison of the
//! sets where the expansion settles, `S_J` stays small, and `f*` stays small.

use serde::Serialize;

use crate::grid::GridSet;

use super::{ExpansionError, ExpansionSequence, Mra};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SquareFunction {
    pub resolution: u32,
    /// Midpoints of the level-`resolution` cells of `[0, 1]`.
    pub x: Vec<f64>,
    /// `f_j(x)` for `j = 0..=J`.
    pub levels: Vec<Vec<f64>>,
    /// `S_j(x)` for `j = 0..=J`.
    pub s: Vec<Vec<f64>>,
    /// `max_{j <= J} |f_j(x)|`.
    pub fstar: Vec<f64>,
}

impl SquareFunction {
    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn s_top(&self) -> &[f64] {
        &self.s[self.top()]
    }

    /// `|f_{j+1}(x) - f_j(x)|`.
    pub fn increment(&self, j: usize) -> Vec<f64> {
        self.levels[j + 1]
            .iter()
            .zip(&self.levels[j])
            .map(|(a, b)| (a - b).abs())
            .collect()
    }
}

/// Evaluates every level on the grid and accumulates `S_j` and `f*`.
pub fn square_function(mra: &Mra, seq: &ExpansionSequence) -> Result<SquareFunction, ExpansionError> {
    if seq.levels.len() < 2 {
        return Err(ExpansionError::TooFewLevels(2));
    }
    seq.check_consistent(mra)?;
    let l = mra.config().eval_resolution;
    let h = (-(l as f64)).exp2();
    let x: Vec<f64> = (0..1usize << l).map(|i| (i as f64 + 0.5) * h).collect();
    let levels: Vec<Vec<f64>> = seq.levels.iter().map(|c| mra.evaluate_unit(c)).collect();
    let mut sq: Vec<f64> = levels[0].iter().map(|v| v * v).collect();
    let mut s = vec![levels[0].iter().map(|v| v.abs()).collect::<Vec<f64>>()];
    let mut fstar = s[0].clone();
    for j in 0..levels.len() - 1 {
        for (i, acc) in sq.iter_mut().enumerate() {
            let d = levels[j + 1][i] - levels[j][i];
            *acc += d * d;
            fstar[i] = fstar[i].max(levels[j + 1][i].abs());
        }
        s.push(sq.iter().map(|v| v.sqrt()).collect());
    }
    Ok(SquareFunction {
        resolution: l,
        x,
        levels,
        s,
        fstar,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub s_measure: f64,
    pub fstar_measure: f64,
    pub diff_cauchy_s: f64,
    pub diff_cauchy_fstar: f64,
    pub diff_s_fstar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub note: &'static str,
    pub levels: usize,
    pub resolution: u32,
    /// Cauchy proxy: `max_{j0 <= j < j' <= J} |f_j' - f_j| <= tail_tol`.
    pub tail_start: usize,
    pub tail_tol: f64,
    pub cauchy_measure: f64,
    pub s_max: f64,
    pub s_argmax: f64,
    pub fstar_max: f64,
    pub fstar_argmax: f64,
    /// Largest last-level increment `|f_J - f_{J-1}|` and where it occurs.
    pub peak_increment: f64,
    pub peak_increment_x: f64,
    pub rows: Vec<ThresholdRow>,
}

const NOTE: &str = "diagnostic at finite depth J: the sets below are compared on a grid, \
which can be consistent with or in tension with an almost-everywhere statement at J = infinity \
but cannot decide it";

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn equivalence_report(
    sf: &SquareFunction,
    thresholds: &[f64],
    tail_start: usize,
    tail_tol: f64,
) -> EquivalenceReport {
    let r = sf.resolution;
    let top = sf.top();
    let j0 = tail_start.min(top);
    let cauchy = GridSet::from_fn(r, |i| {
        let (lo, hi) = sf.levels[j0..]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| {
                (lo.min(f[i]), hi.max(f[i]))
            });
        hi - lo <= tail_tol
    });
    let s_top = sf.s_top();
    let rows = thresholds
        .iter()
        .map(|&m| {
            let s_set = GridSet::from_fn(r, |i| s_top[i] <= m);
            let f_set = GridSet::from_fn(r, |i| sf.fstar[i] <= m);
            ThresholdRow {
                threshold: m,
                s_measure: s_set.measure(),
                fstar_measure: f_set.measure(),
                diff_cauchy_s: cauchy.symmetric_difference_measure(&s_set),
                diff_cauchy_fstar: cauchy.symmetric_difference_measure(&f_set),
                diff_s_fstar: s_set.symmetric_difference_measure(&f_set),
            }
        })
        .collect();
    let si = argmax(s_top);
    let fi = argmax(&sf.fstar);
    let inc = sf.increment(top - 1);
    let ii = argmax(&inc);
    EquivalenceReport {
        note: NOTE,
        levels: top,
        resolution: r,
        tail_start: j0,
        tail_tol,
        cauchy_measure: cauchy.measure(),
        s_max: s_top[si],
        s_argmax: sf.x[si],
        fstar_max: sf.fstar[fi],
        fstar_argmax: sf.x[fi],
        peak_increment: inc[ii],
        peak_increment_x: sf.x[ii],
        rows,
    }
}
