//! Subsets of `[0, 1]` approximated on the dyadic grid of cells
//! `[i 2^-r, (i + 1) 2^-r)`.

use bitvec::prelude::*;
use serde::Serialize;

use crate::eval::Evaluator;
use crate::scalar::{dot, Scalar};
use crate::two_scale::Digit;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSet {
    resolution: u32,
    cells: BitVec,
}

impl GridSet {
    pub fn empty(resolution: u32) -> Self {
        Self {
            resolution,
            cells: bitvec![0; 1usize << resolution],
        }
    }

    pub fn full(resolution: u32) -> Self {
        Self {
            resolution,
            cells: bitvec![1; 1usize << resolution],
        }
    }

    pub fn from_fn(resolution: u32, mut member: impl FnMut(usize) -> bool) -> Self {
        let n = 1usize << resolution;
        Self {
            resolution,
            cells: (0..n).map(&mut member).collect(),
        }
    }

    /// Cells meeting the half-open interval `[lo, hi)`.
    pub fn interval(resolution: u32, lo: f64, hi: f64) -> Self {
        let h = (-(resolution as f64)).exp2();
        Self::from_fn(resolution, |i| {
            let a = i as f64 * h;
            a < hi && a + h > lo
        })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn count(&self) -> usize {
        self.cells.count_ones()
    }

    /// Lebesgue measure of the union of member cells.
    pub fn measure(&self) -> f64 {
        self.count() as f64 / self.cell_count() as f64
    }

    pub fn is_empty(&self) -> bool {
        self.cells.not_any()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells[cell]
    }

    pub fn insert(&mut self, cell: usize) {
        self.cells.set(cell, true);
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter_ones()
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        (cell as f64 + 0.5) * (-(self.resolution as f64)).exp2()
    }

    pub fn is_subset(&self, other: &GridSet) -> bool {
        assert_eq!(self.resolution, other.resolution);
        self.members().all(|i| other.contains(i))
    }

    pub fn symmetric_difference_measure(&self, other: &GridSet) -> f64 {
        assert_eq!(self.resolution, other.resolution);
        let diff = self.cells.clone() ^ other.cells.clone();
        diff.count_ones() as f64 / self.cell_count() as f64
    }

    /// Number of member cells inside the dyadic interval named by `word`.
    pub fn count_in(&self, word: &[Digit]) -> usize {
        let (start, len) = word_cells(word, self.resolution);
        self.cells[start..start + len].count_ones()
    }
}

/// Range of level-`resolution` cells inside the dyadic interval of `word`.
pub fn word_cells(word: &[Digit], resolution: u32) -> (usize, usize) {
    assert!(word.len() as u32 <= resolution);
    let depth = word.len() as u32;
    let index = word.iter().fold(0usize, |acc, d| (acc << 1) | d.bit() as usize);
    let len = 1usize << (resolution - depth);
    (index * len, len)
}

/// `Phi` at the midpoints of the level-`resolution` cells; these are the odd
/// nodes of level `resolution + 1`.
#[derive(Clone, Debug)]
pub struct MidpointSamples<T> {
    resolution: u32,
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> MidpointSamples<T> {
    pub fn new(evaluator: &Evaluator<T>, resolution: u32) -> Self {
        let table = evaluator.table(resolution + 1);
        let n = evaluator.n();
        let cells = 1usize << resolution;
        let mut values = Vec::with_capacity(cells * n);
        for i in 0..cells {
            values.extend_from_slice(table.get(2 * i + 1));
        }
        Self {
            resolution,
            n,
            values,
        }
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cell_count(&self) -> usize {
        1usize << self.resolution
    }

    pub fn phi(&self, cell: usize) -> &[T] {
        &self.values[cell * self.n..(cell + 1) * self.n]
    }

    /// `c . Phi` at every midpoint.
    pub fn combination(&self, c: &[T]) -> Vec<T> {
        assert_eq!(c.len(), self.n);
        self.values.chunks(self.n).map(|phi| dot(c, phi)).collect()
    }

    /// Cells whose midpoint value satisfies `|c . Phi| <= tol`.
    pub fn level_set(&self, c: &[T], tol: f64) -> GridSet {
        let vals = self.combination(c);
        GridSet::from_fn(self.resolution, |i| vals[i].magnitude() <= tol)
    }
}

/// Measure summary used in reports.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MeasureAtResolution {
    pub resolution: u32,
    pub tol: f64,
    pub measure: f64,
}
