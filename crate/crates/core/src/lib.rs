//! Two-scale matrix machinery for compactly supported refinable functions.
//!
//! A dilation mask `p_0..p_N` (see [`mask`]) determines the two-scale
//! matrices `P0`, `P1` ([`two_scale`]). These drive exact evaluation of the
//! translate vector `Phi(x) = (phi(x), ..., phi(x + N - 1))` on `[0, 1]`
//! ([`eval`]), the search for annihilating digit words and the measurement of
//! zero sets of translate combinations ([`independence`]), estimates of the
//! two-norm constants comparing `sum |a_k|` with `sup_E |sum a_k phi(x+k)|`
//! ([`mz`]), and square-function diagnostics of multiresolution expansions
//! ([`expansion`]).

pub mod dyadic;
pub mod eval;
pub mod expansion;
pub mod grid;
pub mod independence;
pub mod linalg;
pub mod mask;
pub mod mz;
pub mod scalar;
pub mod two_scale;

pub use dyadic::DyadicPoint;
pub use eval::{cascade, phi_at_integers, EvalError, Evaluator, PhiEnclosure, PhiVector};
pub use expansion::{
    equivalence_report, gramian, square_function, ExpansionConfig, ExpansionError, ExpansionSequence,
    Gramian, LevelCoeffs, Mra, TestFunction,
};
pub use grid::{GridSet, MidpointSamples};
pub use independence::{
    amplify, annihilation_search, classify, density_interval, never_zero_certificate, push_forward, zero_set,
    Annihilation, Certificate, CoefVector, Dichotomy, IndependenceError,
};
pub use mask::{builtin_by_name, builtin_mask, validate_mask, Coefficient, Family, Mask, MaskError};
pub use mz::{c_of_delta, c_of_e, mz_report, sup_constant, MzContext, MzError, MzOptions, MzReport, Norm};
pub use scalar::{Rational, Scalar};
pub use two_scale::{build_two_scale, build_two_scale_exact, Digit, TwoScalePair};

/// Library version embedded in generated reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
