//! Deterministic synthetic instance generators.
//!
//! The bundled corpus, the benchmark baselines, and a large share of the
//! test suite need reproducible instances with controllable structure.
//! Everything here is driven by a caller-supplied RNG, so a fixed seed
//! reproduces an instance bit-for-bit. Entries are small non-negative
//! integers (stored in the scalar type), matching the texture of the
//! classical facility-layout benchmarks: integer flows and distances,
//! zero diagonals, optional symmetry.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::instance::QapInstance;
use crate::scalar::Scalar;

/// Knobs for [`random_instance`].
#[derive(Debug, Clone, Copy)]
pub struct SyntheticOptions {
    /// Mirror the upper triangle into the lower one.
    pub symmetric: bool,
    /// Force a zero diagonal (no self-flow, no self-distance).
    pub zero_diagonal: bool,
    /// Entries are uniform integers in `0..=max_value`.
    pub max_value: u32,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            symmetric: true,
            zero_diagonal: true,
            max_value: 100,
        }
    }
}

fn random_matrix<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    options: SyntheticOptions,
) -> Array2<T> {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if options.symmetric && j < i {
                continue;
            }
            if options.zero_diagonal && i == j {
                continue;
            }
            let v = T::cast(rng.gen_range(0..=options.max_value) as f64);
            m[[i, j]] = v;
            if options.symmetric {
                m[[j, i]] = v;
            }
        }
    }
    m
}

/// Random flow/distance instance with independent uniform integer entries.
pub fn random_instance<T: Scalar, R: Rng + ?Sized>(
    name: &str,
    n: usize,
    rng: &mut R,
    options: SyntheticOptions,
) -> QapInstance<T> {
    let a = random_matrix(rng, n, options);
    let b = random_matrix(rng, n, options);
    QapInstance::new(name, a, b).expect("generated matrices are square, finite, and sized 1..=MAX_N")
}

/// Facility-layout style instance: locations on a `rows × cols` grid with
/// Manhattan distances, and random symmetric integer flows.
///
/// The distance matrix is structured (symmetric, zero diagonal, many
/// repeated values), which is the texture the classical benchmark sets
/// have; the flow matrix is drawn like [`random_instance`]'s.
pub fn grid_instance<T: Scalar, R: Rng + ?Sized>(
    name: &str,
    rows: usize,
    cols: usize,
    max_flow: u32,
    rng: &mut R,
) -> QapInstance<T> {
    let n = rows * cols;
    let mut b = Array2::zeros((n, n));
    for p in 0..n {
        for q in 0..n {
            let (pr, pc) = (p / cols, p % cols);
            let (qr, qc) = (q / cols, q % cols);
            let dist = pr.abs_diff(qr) + pc.abs_diff(qc);
            b[[p, q]] = T::cast(dist as f64);
        }
    }
    let a = random_matrix(
        rng,
        n,
        SyntheticOptions {
            symmetric: true,
            zero_diagonal: true,
            max_value: max_flow,
        },
    );
    QapInstance::new(name, a, b).expect("grid instance is well-formed by construction")
}

/// Uniformly random permutation of `0..n` (Fisher–Yates via `shuffle`).
pub fn random_permutation<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}
