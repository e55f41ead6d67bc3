//! Error type shared by every fallible operation in the crate.
//!
//! The enum is generic over the scalar so diagnostic payloads (iterates,
//! quadratic-form values) keep their native precision. Errors that callers
//! are expected to react to carry enough state to do so: a failed projection
//! returns its last iterate so the caller can retry with a looser tolerance,
//! and a timed-out solve returns the partial assignment built so far.

use ndarray::Array2;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum Error<T: Scalar = f64> {
    /// Instance text did not match the `n, A, B` whitespace grammar.
    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    /// Solution text did not match the `n, objective, permutation` grammar.
    #[error("malformed solution: {0}")]
    MalformedSolution(String),

    /// A permutation argument was not a bijection on 1..=n.
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    /// A vector or matrix argument had the wrong size for the instance.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },

    /// The dense spectral strategy was asked to materialize a matrix above
    /// its size cap.
    #[error("dense spectral strategy capped at n = {max}, instance has n = {n}")]
    StrategyTooLarge { n: usize, max: usize },

    /// The iterative eigensolver ran out of matrix applications before
    /// reaching its tolerance.
    #[error("spectral bounds did not converge: {0}")]
    SpectralFailure(String),

    /// A quadratic form that must be positive (curvature along a descent
    /// direction) was not; the relaxation is broken or the input is.
    #[error("curvature along gradient is not positive ({value}); relaxation is not convex")]
    ConvexityViolation { value: T },

    /// Spectral bounds passed to the trigger formula were not ordered
    /// positive reals.
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    /// Alternating projection exhausted its sweep budget. Carries the last
    /// iterate and its worst constraint violation so the caller may retry
    /// with a looser tolerance.
    #[error("projection not doubly stochastic after {sweeps} sweeps (violation {violation})")]
    ProjectionNotConverged {
        iterate: Array2<T>,
        violation: T,
        sweeps: usize,
    },

    /// A solver or relaxation parameter was outside its documented range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A non-finite value surfaced where a finite one is required.
    #[error("numeric failure: {0}")]
    NumericError(String),

    /// Brute-force oracles refuse inputs large enough to take forever.
    #[error("oracle capped at n = {max}, instance has n = {n}")]
    TooLargeForOracle { n: usize, max: usize },

    /// Wall-clock budget exceeded. Carries the rows fixed so far
    /// (`partial[i] = Some(j)` means row i is assigned column j, 0-based).
    #[error("solve timed out after fixing {fixed} of {n} rows")]
    TimedOut {
        partial: Vec<Option<usize>>,
        fixed: usize,
        n: usize,
    },
}
