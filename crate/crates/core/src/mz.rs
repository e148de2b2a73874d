//! Lower and upper norm constants for translate combinations on subsets of
//! `[0, 1]`:
//!
//! `C |a| <= sup_{x in E} |sum_k a_k phi(x + k)| <= B |a|_1`.
//!
//! `C(E)` is the infimum of the sup over unit vectors `a`; `C_delta` is the
//! infimum of `C(E)` over all `E` with `m(E) >= delta`. For fixed `a` the
//! worst such `E` is a sublevel set of `|a . Phi|`, so `C_delta` is the
//! infimum over `a` of the `delta`-quantile of `|a . Phi|`.
//!
//! Estimates minimize over a finite pool of candidate directions and are
//! therefore upper bounds on the infimum. For `N <= 4` a lattice sweep of
//! the unit `l1` sphere also gives a certified lower bound (on the grid).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eval::Evaluator;
use crate::grid::{GridSet, MidpointSamples};
use crate::mask::Mask;
use crate::scalar::{norm_l1, norm_l2};
use crate::two_scale::build_two_scale;

pub const DEFAULT_STARTS: usize = 64;
pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_ITERATIONS: usize = 300;
pub const DEFAULT_SWEEP_BUDGET: usize = 1 << 14;
/// Largest `N` for which the lattice sweep is run.
pub const SWEEP_MAX_N: usize = 4;

const STEP_START: f64 = 0.2;
const STEP_END: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MzError {
    #[error("set E is empty at resolution {0}")]
    EmptySet(u32),
    #[error("delta must lie in (0, 1], got {0}")]
    InvalidDelta(f64),
    #[error("set resolution {set} differs from sample resolution {samples}")]
    ResolutionMismatch { set: u32, samples: u32 },
    #[error("mask {0} is not continuity-capable")]
    NotContinuous(String),
    #[error("{0}")]
    Setup(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn of(self, a: &[f64]) -> f64 {
        match self {
            Norm::L1 => norm_l1(a),
            Norm::L2 => norm_l2(a),
        }
    }

    pub fn normalize(self, a: &mut [f64]) {
        let s = self.of(a);
        if s > 0.0 {
            a.iter_mut().for_each(|x| *x /= s);
        }
    }
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "ell1" => Ok(Norm::L1),
            "l2" | "ell2" => Ok(Norm::L2),
            other => Err(format!("unknown norm {other:?} (expected l1 or l2)")),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MzOptions {
    pub starts: usize,
    pub seed: u64,
    pub iterations: usize,
    pub sweep_budget: usize,
}

impl Default for MzOptions {
    fn default() -> Self {
        Self {
            starts: DEFAULT_STARTS,
            seed: DEFAULT_SEED,
            iterations: DEFAULT_ITERATIONS,
            sweep_budget: DEFAULT_SWEEP_BUDGET,
        }
    }
}

/// Midpoint samples of `Phi` at one resolution together with `B`.
pub struct MzContext {
    samples: MidpointSamples<f64>,
    b: f64,
}

impl MzContext {
    pub fn new(evaluator: &Evaluator<f64>, resolution: u32) -> Self {
        Self {
            samples: MidpointSamples::new(evaluator, resolution),
            b: sup_constant(evaluator, resolution),
        }
    }

    pub fn resolution(&self) -> u32 {
        self.samples.resolution()
    }

    pub fn n(&self) -> usize {
        self.samples.n()
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn samples(&self) -> &MidpointSamples<f64> {
        &self.samples
    }

    /// `|a . Phi|` at every cell midpoint.
    pub fn abs_values(&self, a: &[f64]) -> Vec<f64> {
        (0..self.samples.cell_count())
            .map(|i| dot(a, self.samples.phi(i)).abs())
            .collect()
    }

    /// `sup_{x in E} |a . Phi(x)|` over the midpoints of `E`.
    pub fn sup_on(&self, set: &GridSet, a: &[f64]) -> f64 {
        set.members()
            .map(|i| dot(a, self.samples.phi(i)).abs())
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `B = max |phi|` over the level-`resolution` nodes of `[0, N]`.
pub fn sup_constant(evaluator: &Evaluator<f64>, resolution: u32) -> f64 {
    evaluator
        .table(resolution)
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

/// What a constant is taken over.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Set { label: String, set: GridSet },
    Delta(f64),
}

impl Target {
    pub fn label(&self) -> String {
        match self {
            Target::Set { label, .. } => label.clone(),
            Target::Delta(d) => format!("delta={d}"),
        }
    }
}

/// Order statistic of `|a . Phi|` over a fixed list of cells.
struct Objective {
    cells: Option<Vec<usize>>,
    /// 1-based rank; equal to the cell count for a sup.
    rank: usize,
}

impl Objective {
    fn new(ctx: &MzContext, target: &Target) -> Result<Self, MzError> {
        match target {
            Target::Set { set, .. } => {
                if set.resolution() != ctx.resolution() {
                    return Err(MzError::ResolutionMismatch {
                        set: set.resolution(),
                        samples: ctx.resolution(),
                    });
                }
                let cells: Vec<usize> = set.members().collect();
                if cells.is_empty() {
                    return Err(MzError::EmptySet(set.resolution()));
                }
                let rank = cells.len();
                Ok(Self {
                    cells: Some(cells),
                    rank,
                })
            }
            Target::Delta(d) => Ok(Self {
                cells: None,
                rank: quantile_rank(*d, ctx.samples.cell_count())?,
            }),
        }
    }

    fn signed(&self, ctx: &MzContext, a: &[f64]) -> Vec<(f64, usize)> {
        let row = |i: usize| (dot(a, ctx.samples.phi(i)), i);
        match &self.cells {
            Some(cells) => cells.iter().map(|&i| row(i)).collect(),
            None => (0..ctx.samples.cell_count()).map(row).collect(),
        }
    }

    fn select(&self, vals: &mut [(f64, usize)]) -> (f64, usize) {
        let k = self.rank - 1;
        let (_, at, _) =
            vals.select_nth_unstable_by(k, |x, y| x.0.abs().total_cmp(&y.0.abs()).then(x.1.cmp(&y.1)));
        *at
    }

    fn value(&self, ctx: &MzContext, a: &[f64]) -> f64 {
        let mut vals = self.signed(ctx, a);
        self.select(&mut vals).0.abs()
    }

    /// Value on precomputed `|a . Phi|` for all cells.
    fn value_from_abs(&self, abs: &[f64]) -> f64 {
        match &self.cells {
            Some(cells) if self.rank == cells.len() => cells.iter().map(|&i| abs[i]).fold(0.0, f64::max),
            Some(cells) => {
                let mut v: Vec<f64> = cells.iter().map(|&i| abs[i]).collect();
                *v.select_nth_unstable_by(self.rank - 1, f64::total_cmp).1
            }
            None if self.rank == abs.len() => abs.iter().copied().fold(0.0, f64::max),
            None => {
                let mut v = abs.to_vec();
                *v.select_nth_unstable_by(self.rank - 1, f64::total_cmp).1
            }
        }
    }

    fn value_and_subgradient(&self, ctx: &MzContext, a: &[f64]) -> (f64, Vec<f64>) {
        let mut vals = self.signed(ctx, a);
        let (v, i) = self.select(&mut vals);
        let s = if v < 0.0 { -1.0 } else { 1.0 };
        (v.abs(), ctx.samples.phi(i).iter().map(|p| s * p).collect())
    }
}

/// `ceil(delta * cells)`, clamped to `1..=cells`.
pub fn quantile_rank(delta: f64, cells: usize) -> Result<usize, MzError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(MzError::InvalidDelta(delta));
    }
    Ok(((delta * cells as f64).ceil() as usize).clamp(1, cells))
}

/// `k`-th smallest value of `|a . Phi|` over all cells, `k = ceil(delta 2^r)`.
pub fn quantile(ctx: &MzContext, a: &[f64], delta: f64) -> Result<f64, MzError> {
    let obj = Objective {
        cells: None,
        rank: quantile_rank(delta, ctx.samples.cell_count())?,
    };
    Ok(obj.value(ctx, a))
}

/// Seeded start directions, normalized in `norm`.
pub fn start_directions(n: usize, norm: Norm, opts: &MzOptions) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.starts)
        .map(|_| {
            let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if a.iter().all(|x| *x == 0.0) {
                a[0] = 1.0;
            }
            norm.normalize(&mut a);
            a
        })
        .collect()
}

/// Projected subgradient descent from one start; returns the best point.
fn descend(ctx: &MzContext, obj: &Objective, norm: Norm, start: &[f64], iterations: usize) -> Vec<f64> {
    let mut a = start.to_vec();
    let mut best = (f64::INFINITY, a.clone());
    let ratio = if iterations > 1 {
        (STEP_END / STEP_START).powf(1.0 / (iterations - 1) as f64)
    } else {
        1.0
    };
    let mut eta = STEP_START;
    for _ in 0..iterations {
        let (v, g) = obj.value_and_subgradient(ctx, &a);
        if v < best.0 {
            best = (v, a.clone());
        }
        let gn = norm_l2(&g);
        if gn == 0.0 {
            break;
        }
        for (x, gi) in a.iter_mut().zip(&g) {
            *x -= eta * gi / gn;
        }
        if norm.of(&a) == 0.0 {
            break;
        }
        norm.normalize(&mut a);
        eta *= ratio;
    }
    let (v, _) = obj.value_and_subgradient(ctx, &a);
    if v < best.0 {
        best = (v, a);
    }
    best.1
}

/// Certified lower bounds on the grid constant for both normalizations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LowerBounds {
    pub l1: f64,
    pub l2: f64,
    /// Lattice scale `M`: points are `k / M` with `sum |k_i| = M`.
    pub lattice_scale: usize,
    pub lattice_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub target: String,
    pub delta: Option<f64>,
    pub measure: f64,
    /// Estimate in the requested normalization (an upper bound on the
    /// infimum).
    pub c: f64,
    pub argmin: Vec<f64>,
    pub c_l1: f64,
    pub c_l2: f64,
    pub lower: Option<LowerBounds>,
}

impl Estimate {
    pub fn in_norm(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L1 => self.c_l1,
            Norm::L2 => self.c_l2,
        }
    }
}

/// Estimates the constant for every target from one shared candidate pool.
///
/// Descent is run for each target; every candidate is then scored on every
/// target in both norms. Sharing the pool makes the estimates monotone in
/// `delta` and in nested sets and keeps `C_l1 <= C_l2 <= sqrt(N) C_l1`.
pub fn estimate(
    ctx: &MzContext,
    targets: &[Target],
    norm: Norm,
    opts: &MzOptions,
) -> Result<Vec<Estimate>, MzError> {
    let objectives = targets
        .iter()
        .map(|t| Objective::new(ctx, t))
        .collect::<Result<Vec<_>, _>>()?;
    let n = ctx.n();
    let starts = start_directions(n, norm, opts);
    let mut pool: Vec<Vec<f64>> = Vec::new();
    for obj in &objectives {
        let found: Vec<Vec<f64>> = starts
            .par_iter()
            .map(|s| descend(ctx, obj, norm, s, opts.iterations))
            .collect();
        pool.extend(found);
    }
    let sweep = if n <= SWEEP_MAX_N && !objectives.is_empty() {
        Some(lattice_sweep(ctx, &objectives, opts.sweep_budget))
    } else {
        None
    };
    if let Some(s) = &sweep {
        pool.extend(s.argmins.iter().cloned());
    }
    let abs_pool: Vec<Vec<f64>> = pool.par_iter().map(|a| ctx.abs_values(a)).collect();
    let mut out = Vec::with_capacity(targets.len());
    for (t, (target, obj)) in targets.iter().zip(&objectives).enumerate() {
        let mut best_l1 = (f64::INFINITY, 0usize);
        let mut best_l2 = (f64::INFINITY, 0usize);
        for (j, (a, abs)) in pool.iter().zip(&abs_pool).enumerate() {
            let v = obj.value_from_abs(abs);
            let r1 = v / norm_l1(a);
            let r2 = v / norm_l2(a);
            if r1 < best_l1.0 {
                best_l1 = (r1, j);
            }
            if r2 < best_l2.0 {
                best_l2 = (r2, j);
            }
        }
        let (c, j) = match norm {
            Norm::L1 => best_l1,
            Norm::L2 => best_l2,
        };
        let mut argmin = pool[j].clone();
        norm.normalize(&mut argmin);
        canonical_sign(&mut argmin);
        let (delta, measure) = match target {
            Target::Delta(d) => (Some(*d), obj.rank as f64 / ctx.samples.cell_count() as f64),
            Target::Set { set, .. } => (None, set.measure()),
        };
        out.push(Estimate {
            target: target.label(),
            delta,
            measure,
            c,
            argmin,
            c_l1: best_l1.0,
            c_l2: best_l2.0,
            lower: sweep.as_ref().map(|s| s.bounds[t]),
        });
    }
    Ok(out)
}

fn canonical_sign(a: &mut [f64]) {
    if let Some(first) = a.iter().find(|x| **x != 0.0) {
        if *first < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn c_of_e(ctx: &MzContext, set: &GridSet, norm: Norm, opts: &MzOptions) -> Result<Estimate, MzError> {
    let target = Target::Set {
        label: "E".into(),
        set: set.clone(),
    };
    Ok(estimate(ctx, &[target], norm, opts)?.remove(0))
}

pub fn c_of_delta(ctx: &MzContext, delta: f64, norm: Norm, opts: &MzOptions) -> Result<Estimate, MzError> {
    Ok(estimate(ctx, &[Target::Delta(delta)], norm, opts)?.remove(0))
}

struct Sweep {
    bounds: Vec<LowerBounds>,
    argmins: Vec<Vec<f64>>,
}

/// Points `k` with `sum |k_i| = m` whose first nonzero entry is positive.
fn half_lattice_count(n: usize, m: usize) -> usize {
    // choose the support size j and the signs; halve for the +- symmetry
    let mut total = 0usize;
    for j in 1..=n.min(m) {
        total += binomial(n, j) * (1usize << j) * binomial(m - 1, j - 1);
    }
    total / 2
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn lattice_scale(n: usize, budget: usize) -> usize {
    let mut m = 1;
    while half_lattice_count(n, m + 1) <= budget {
        m += 1;
    }
    m
}

fn half_lattice(n: usize, m: usize) -> Vec<Vec<i64>> {
    fn rec(n: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n - 1 {
            for v in if left == 0 { vec![0] } else { vec![left, -left] } {
                cur.push(v);
                if cur.iter().find(|x| **x != 0).is_some_and(|x| *x > 0) {
                    out.push(cur.clone());
                }
                cur.pop();
            }
            return;
        }
        for mag in 0..=left {
            for s in if mag == 0 { vec![0] } else { vec![mag, -mag] } {
                cur.push(s);
                rec(n, left - mag, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, m as i64, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Every `a` on the unit `l1` sphere lies within `l1` distance `N / M` of a
/// lattice point, and each objective is `B`-Lipschitz in `l1`.
fn lattice_sweep(ctx: &MzContext, objectives: &[Objective], budget: usize) -> Sweep {
    let n = ctx.n();
    let m = lattice_scale(n, budget);
    let points = half_lattice(n, m);
    let rho = n as f64 / m as f64;
    let b = ctx.b();
    let scored: Vec<Vec<f64>> = points
        .par_iter()
        .map(|k| {
            let u: Vec<f64> = k.iter().map(|&x| x as f64 / m as f64).collect();
            let abs = ctx.abs_values(&u);
            objectives.iter().map(|o| o.value_from_abs(&abs)).collect()
        })
        .collect();
    let mut bounds = Vec::with_capacity(objectives.len());
    let mut argmins = Vec::with_capacity(objectives.len());
    for t in 0..objectives.len() {
        let mut best = (f64::INFINITY, 0usize);
        let mut l2 = f64::INFINITY;
        for (i, k) in points.iter().enumerate() {
            let f = scored[i][t];
            if f < best.0 {
                best = (f, i);
            }
            let u2 = k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt() / m as f64;
            l2 = l2.min((f - b * rho) / (u2 + rho));
        }
        bounds.push(LowerBounds {
            l1: (best.0 - b * rho).max(0.0),
            l2: l2.max(0.0),
            lattice_scale: m,
            lattice_points: points.len(),
        });
        argmins.push(points[best.1].iter().map(|&x| x as f64 / m as f64).collect());
    }
    Sweep { bounds, argmins }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MzReport {
    pub mask: String,
    pub normalization: Norm,
    pub resolution: u32,
    pub b: f64,
    pub options: MzOptions,
    /// The `c` values minimize over a finite candidate pool.
    pub estimate_kind: &'static str,
    pub entries: Vec<Estimate>,
}

pub fn mz_report(
    mask: &Mask,
    deltas: &[f64],
    resolution: u32,
    norm: Norm,
    opts: &MzOptions,
) -> Result<MzReport, MzError> {
    if !mask.continuity_capable() {
        return Err(MzError::NotContinuous(mask.name().to_string()));
    }
    for &d in deltas {
        quantile_rank(d, 1)?;
    }
    let pair = build_two_scale(mask).map_err(|e| MzError::Setup(e.to_string()))?;
    let ev = Evaluator::new(pair).map_err(|e| MzError::Setup(e.to_string()))?;
    let ctx = MzContext::new(&ev, resolution);
    let targets: Vec<Target> = deltas.iter().map(|&d| Target::Delta(d)).collect();
    let entries = estimate(&ctx, &targets, norm, opts)?;
    Ok(MzReport {
        mask: mask.name().to_string(),
        normalization: norm,
        resolution,
        b: ctx.b(),
        options: opts.clone(),
        estimate_kind: "upper bound on the infimum over the unit sphere",
        entries,
    })
}
