//! Zero sets of translate combinations and the annihilation / never-zero
//! dichotomy for coefficient vectors under two-scale products.
//!
//! For `c` in `R^N` and a digit word `w = (e_1, ..., e_m)`,
//! `c . Phi(x) = (P_{e_m} ... P_{e_1} c) . Phi(T^m x)` on the dyadic cell
//! `I_w`. A word with `P_w c = 0` therefore forces `c . Phi = 0` on all of
//! `I_w`.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eval::Evaluator;
use crate::grid::{word_cells, GridSet, MidpointSamples};
use crate::scalar::{norm_l1, norm_l2, Rational, Scalar};
use crate::two_scale::{Digit, TwoScalePair};
use num::Zero;

/// Float zero test for annihilation, relative to `|c|_2`.
pub const ANNIHILATION_REL_TOL: f64 = 1e-13;
/// Float threshold a certificate's minimum norm must exceed, relative to `|c|_2`.
pub const CERTIFICATE_REL_TOL: f64 = 1e-10;
/// Quantization step for float direction keys.
pub const DIRECTION_QUANTUM: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndependenceError {
    #[error("coefficient vector is zero")]
    ZeroVector,
    #[error("coefficient vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the word annihilates the vector")]
    AnnihilatedVector,
    #[error("no dyadic cell up to depth {max_depth} has density above {threshold}")]
    NotFound { max_depth: u32, threshold: f64 },
    #[error("zero set is empty")]
    EmptySet,
}

/// Coefficient vector with cached norms.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefVector<T> {
    components: Vec<T>,
    l1: f64,
    l2: f64,
}

impl<T: Scalar> CoefVector<T> {
    pub fn new(components: Vec<T>) -> Self {
        let l1 = norm_l1(&components);
        let l2 = norm_l2(&components);
        Self { components, l1, l2 }
    }

    pub fn components(&self) -> &[T] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|x| x.is_zero())
    }

    pub fn unit(&self) -> Vec<f64> {
        self.components.iter().map(|x| x.to_f64() / self.l2).collect()
    }

    fn checked(&self, n: usize) -> Result<(), IndependenceError> {
        if self.len() != n {
            return Err(IndependenceError::DimensionMismatch {
                expected: n,
                got: self.len(),
            });
        }
        if self.is_zero() {
            return Err(IndependenceError::ZeroVector);
        }
        Ok(())
    }
}

impl From<Vec<f64>> for CoefVector<f64> {
    fn from(v: Vec<f64>) -> Self {
        Self::new(v)
    }
}

impl From<Vec<Rational>> for CoefVector<Rational> {
    fn from(v: Vec<Rational>) -> Self {
        Self::new(v)
    }
}

/// Scalars whose vectors can be keyed by direction (`v ~ lambda v`).
pub trait Projective: Scalar {
    type Key: Hash + Eq + Send;

    /// `None` for the zero vector.
    fn direction_key(v: &[Self]) -> Option<Self::Key>;

    /// Whether `v` counts as the zero vector relative to `scale`.
    fn vanishes(v: &[Self], scale: f64) -> bool;
}

impl Projective for f64 {
    type Key = Vec<i64>;

    fn direction_key(v: &[f64]) -> Option<Vec<i64>> {
        let norm = norm_l2(v);
        if norm == 0.0 {
            return None;
        }
        let lead = v.iter().find(|x| x.abs() > norm * 1e-9)?;
        let s = lead.signum() / norm;
        Some(
            v.iter()
                .map(|x| (x * s / DIRECTION_QUANTUM).round() as i64)
                .collect(),
        )
    }

    fn vanishes(v: &[f64], scale: f64) -> bool {
        norm_l2(v) <= ANNIHILATION_REL_TOL * scale
    }
}

impl Projective for Rational {
    type Key = Vec<Rational>;

    fn direction_key(v: &[Rational]) -> Option<Vec<Rational>> {
        let lead = v.iter().find(|x| !x.is_zero())?.clone();
        Some(v.iter().map(|x| x / &lead).collect())
    }

    fn vanishes(v: &[Rational], _scale: f64) -> bool {
        v.iter().all(|x| x.is_zero())
    }
}

/// Cells of `[0, 1]` at `resolution` whose midpoint has `|c . Phi| <= tol`.
pub fn zero_set<T: Scalar>(
    evaluator: &Evaluator<T>,
    c: &CoefVector<T>,
    resolution: u32,
    tol: f64,
) -> Result<GridSet, IndependenceError> {
    let samples = MidpointSamples::new(evaluator, resolution);
    zero_set_on(&samples, c, tol)
}

/// [`zero_set`] on precomputed midpoint samples.
pub fn zero_set_on<T: Scalar>(
    samples: &MidpointSamples<T>,
    c: &CoefVector<T>,
    tol: f64,
) -> Result<GridSet, IndependenceError> {
    c.checked(samples.n())?;
    Ok(samples.level_set(c.components(), tol))
}

pub fn word_string(word: &[Digit]) -> String {
    word.iter().map(|d| char::from(b'0' + d.bit())).collect()
}

/// Result of the breadth-first exploration of `P_w c` over words `w`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exploration {
    /// Shortest annihilating word (lexicographically first among those).
    #[serde(serialize_with = "ser_opt_word")]
    pub zero_word: Option<Vec<Digit>>,
    /// `min |P_w c|_2` over explored words, including the empty word.
    pub min_norm: f64,
    #[serde(serialize_with = "ser_word")]
    pub min_word: Vec<Digit>,
    /// Depth actually completed.
    pub depth: u32,
    /// Number of vectors computed.
    pub explored: usize,
    /// Number of branches cut by direction dedup.
    pub pruned: usize,
}

fn ser_word<S: serde::Serializer>(w: &[Digit], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&word_string(w))
}

fn ser_opt_word<S: serde::Serializer>(w: &Option<Vec<Digit>>, s: S) -> Result<S::Ok, S::Error> {
    match w {
        Some(w) => s.serialize_some(&word_string(w)),
        None => s.serialize_none(),
    }
}

/// Longest word [`explore`] accepts; words are packed into a `u64`.
pub const MAX_SEARCH_DEPTH: u32 = 63;

struct Node<T> {
    bits: u64,
    v: Vec<T>,
    norm: f64,
}

/// Breadth-first search over words of length at most `max_depth`, in
/// (length, lexicographic) order.
///
/// A node is dropped when an earlier node has the same direction and no
/// larger norm: everything below it is a rescaling, by a factor at least
/// one, of what lies below the earlier node, so neither the first zero nor
/// the minimum norm changes.
pub fn explore<T: Projective>(
    pair: &TwoScalePair<T>,
    c: &CoefVector<T>,
    max_depth: u32,
) -> Result<Exploration, IndependenceError> {
    c.checked(pair.n())?;
    assert!(
        max_depth <= MAX_SEARCH_DEPTH,
        "search depth above {MAX_SEARCH_DEPTH}"
    );
    let scale = c.l2();
    let mut seen: HashMap<T::Key, f64> = HashMap::new();
    let root = Node {
        bits: 0,
        v: c.components().to_vec(),
        norm: scale,
    };
    if let Some(k) = T::direction_key(&root.v) {
        seen.insert(k, scale);
    }
    let mut out = Exploration {
        zero_word: None,
        min_norm: scale,
        min_word: Vec::new(),
        depth: 0,
        explored: 1,
        pruned: 0,
    };
    let mut frontier = vec![root];
    for depth in 1..=max_depth {
        if frontier.is_empty() {
            break;
        }
        let children: Vec<Node<T>> = frontier
            .par_iter()
            .flat_map_iter(|node| {
                [Digit::Zero, Digit::One].into_iter().map(move |d| {
                    let v = pair.matrix(d).mul_vec(&node.v);
                    let norm = norm_l2(&v);
                    Node {
                        bits: (node.bits << 1) | d.bit() as u64,
                        v,
                        norm,
                    }
                })
            })
            .collect();
        let mut next = Vec::with_capacity(children.len());
        for child in children {
            out.explored += 1;
            if T::vanishes(&child.v, scale) {
                let word = index_word(child.bits as usize, depth);
                out.min_norm = 0.0;
                out.min_word = word.clone();
                out.zero_word = Some(word);
                out.depth = depth;
                return Ok(out);
            }
            if child.norm < out.min_norm {
                out.min_norm = child.norm;
                out.min_word = index_word(child.bits as usize, depth);
            }
            let key = match T::direction_key(&child.v) {
                Some(k) => k,
                None => {
                    next.push(child);
                    continue;
                }
            };
            match seen.get_mut(&key) {
                Some(best) if *best <= child.norm * (1.0 + 1e-12) => {
                    out.pruned += 1;
                }
                Some(best) => {
                    *best = child.norm;
                    next.push(child);
                }
                None => {
                    seen.insert(key, child.norm);
                    next.push(child);
                }
            }
        }
        out.depth = depth;
        frontier = next;
    }
    out.depth = max_depth;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Annihilation {
    Found {
        #[serde(serialize_with = "ser_word")]
        word: Vec<Digit>,
        explored: usize,
    },
    NotFound {
        min_norm: f64,
        #[serde(serialize_with = "ser_word")]
        min_word: Vec<Digit>,
        explored: usize,
    },
}

impl Annihilation {
    pub fn word(&self) -> Option<&[Digit]> {
        match self {
            Annihilation::Found { word, .. } => Some(word),
            Annihilation::NotFound { .. } => None,
        }
    }
}

/// First word (shortest, then lexicographic) with `P_w c = 0`.
pub fn annihilation_search<T: Projective>(
    pair: &TwoScalePair<T>,
    c: &CoefVector<T>,
    max_depth: u32,
) -> Result<Annihilation, IndependenceError> {
    let e = explore(pair, c, max_depth)?;
    Ok(match e.zero_word {
        Some(word) => Annihilation::Found {
            word,
            explored: e.explored,
        },
        None => Annihilation::NotFound {
            min_norm: e.min_norm,
            min_word: e.min_word,
            explored: e.explored,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub min_norm: f64,
    #[serde(serialize_with = "ser_word")]
    pub arg_word: Vec<Digit>,
    pub positive: bool,
    pub depth: u32,
    /// Absolute threshold `min_norm` had to exceed (0 in exact mode).
    pub threshold: f64,
    pub explored: usize,
}

/// Minimum of `|P_w c|_2` over all words of length at most `depth`.
pub fn never_zero_certificate<T: Projective>(
    pair: &TwoScalePair<T>,
    c: &CoefVector<T>,
    depth: u32,
) -> Result<Certificate, IndependenceError> {
    let e = explore(pair, c, depth)?;
    Ok(certificate_from(&e, c, depth))
}

fn certificate_from<T: Scalar>(e: &Exploration, c: &CoefVector<T>, depth: u32) -> Certificate {
    let threshold = if T::EXACT {
        0.0
    } else {
        CERTIFICATE_REL_TOL * c.l2()
    };
    Certificate {
        min_norm: e.min_norm,
        arg_word: e.min_word.clone(),
        positive: e.zero_word.is_none() && e.min_norm > threshold,
        depth,
        threshold,
        explored: e.explored,
    }
}

/// Outcome of one exploration read both ways.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Dichotomy {
    Annihilated {
        #[serde(serialize_with = "ser_word")]
        word: Vec<Digit>,
    },
    Certified(Certificate),
    /// Float mode only: no zero within the annihilation threshold, but the
    /// minimum norm is below the certificate threshold.
    Indeterminate(Certificate),
}

pub fn classify<T: Projective>(
    pair: &TwoScalePair<T>,
    c: &CoefVector<T>,
    depth: u32,
) -> Result<Dichotomy, IndependenceError> {
    let e = explore(pair, c, depth)?;
    if let Some(word) = e.zero_word.clone() {
        return Ok(Dichotomy::Annihilated { word });
    }
    let cert = certificate_from(&e, c, depth);
    Ok(if cert.positive {
        Dichotomy::Certified(cert)
    } else {
        Dichotomy::Indeterminate(cert)
    })
}

/// Shortest word whose cell has `K`-density above `1 - eta`, ties broken
/// by the smallest binary value. Depth is capped at the set's resolution.
pub fn density_interval(
    k: &GridSet,
    eta: f64,
    max_depth: Option<u32>,
) -> Result<Vec<Digit>, IndependenceError> {
    assert!(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
    let r = k.resolution();
    let max_depth = max_depth.map_or(r, |d| d.min(r));
    let threshold = 1.0 - eta;
    if !k.is_empty() {
        for depth in 0..=max_depth {
            let len = 1usize << (r - depth);
            for index in 0..(1usize << depth) {
                let word = index_word(index, depth);
                let density = k.count_in(&word) as f64 / len as f64;
                if density > threshold {
                    return Ok(word);
                }
            }
        }
    }
    Err(IndependenceError::NotFound { max_depth, threshold })
}

/// Digits of `index` written with `depth` binary places.
pub fn index_word(index: usize, depth: u32) -> Vec<Digit> {
    (0..depth)
        .map(|i| Digit::from_bit(((index >> (depth - 1 - i)) & 1) as u8))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PushForward<T> {
    /// `P_{e_j} ... P_{e_1} c`.
    pub raw: Vec<T>,
    /// `raw / |raw|_2`.
    pub unit: Vec<f64>,
}

pub fn push_forward<T: Projective>(
    pair: &TwoScalePair<T>,
    c: &CoefVector<T>,
    word: &[Digit],
) -> Result<PushForward<T>, IndependenceError> {
    c.checked(pair.n())?;
    let raw = pair.apply_word(word, c.components());
    if T::vanishes(&raw, c.l2()) {
        return Err(IndependenceError::AnnihilatedVector);
    }
    let norm = norm_l2(&raw);
    let unit = raw.iter().map(|x| x.to_f64() / norm).collect();
    Ok(PushForward { raw, unit })
}

/// Density cell of `K_c` and the zero set of the pushed-forward vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Amplification<T> {
    pub word: Vec<Digit>,
    /// `m(K_c cap I_w) / |I_w|` at the original resolution.
    pub density: f64,
    pub pushed: PushForward<T>,
    /// `m(K_b)` for the raw pushforward `b`, same `tol`, at resolution
    /// `r - |w|`; the cell midpoints of `I_w` map onto these under `T^|w|`.
    pub pushed_measure: f64,
    pub pushed_resolution: u32,
}

/// Finds a density cell of `K_c` and measures the zero set of `P_w c`.
pub fn amplify<T: Projective>(
    evaluator: &Evaluator<T>,
    c: &CoefVector<T>,
    resolution: u32,
    tol: f64,
    eta: f64,
) -> Result<Amplification<T>, IndependenceError> {
    let k = zero_set(evaluator, c, resolution, tol)?;
    if k.is_empty() {
        return Err(IndependenceError::EmptySet);
    }
    let word = density_interval(&k, eta, None)?;
    let (_, len) = word_cells(&word, resolution);
    let density = k.count_in(&word) as f64 / len as f64;
    let pushed = push_forward(evaluator.pair(), c, &word)?;
    let pushed_resolution = resolution - word.len() as u32;
    let kb = zero_set(
        evaluator,
        &CoefVector::new(pushed.raw.clone()),
        pushed_resolution,
        tol,
    )?;
    Ok(Amplification {
        word,
        density,
        pushed,
        pushed_measure: kb.measure(),
        pushed_resolution,
    })
}
