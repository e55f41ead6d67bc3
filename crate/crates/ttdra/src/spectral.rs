//! Extremal eigenvalue engines for the symmetrized cost operator
//! `W_sym = (W + Wᵀ)/2`, `W = B ⊗ A`.
//!
//! Three paths, selected by the relaxation module:
//!
//! * dense — materialize `W_sym` (n² ≤ 2500 only) and run a full symmetric
//!   eigensolve;
//! * product — when A and B are both symmetric, `eig(B ⊗ A)` is exactly the
//!   pairwise products of their eigenvalue lists, so two n×n eigensolves
//!   suffice;
//! * Lanczos — matrix-free Krylov iteration with full reorthogonalization
//!   for everything else.
//!
//! All engines run in `f64` regardless of the crate's scalar parameter:
//! the requested relative tolerance (1e-8) is finer than `f32` resolution,
//! and spectral bounds feed trigger counts, not per-entry arithmetic.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Krylov basis cap: beyond this many vectors the memory and
/// reorthogonalization cost stop being reasonable for a bound computation.
const MAX_KRYLOV_DIM: usize = 300;
/// Deterministic Lanczos start vector.
const LANCZOS_SEED: u64 = 0x7a5c_01d5;

pub(crate) fn to_f64_mat<T: Scalar>(m: &Array2<T>) -> Array2<f64> {
    m.mapv(|v| v.to_f64_lossy())
}

/// Eigenvalues of a symmetric matrix, via nalgebra.
fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    m.symmetric_eigen().eigenvalues.as_slice().to_vec()
}

fn minmax(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Dense route: explicit `W_sym` and a full eigensolve.
pub(crate) fn dense_bounds(a: &Array2<f64>, b: &Array2<f64>) -> (f64, f64) {
    let n = a.nrows();
    let nn = n * n;
    let w_sym = DMatrix::from_fn(nn, nn, |p, q| {
        let w_pq = b[[p / n, q / n]] * a[[p % n, q % n]];
        let w_qp = b[[q / n, p / n]] * a[[q % n, p % n]];
        0.5 * (w_pq + w_qp)
    });
    minmax(&symmetric_eigenvalues(w_sym))
}

/// Symmetric fast path: for symmetric A and B, the spectrum of `B ⊗ A` is
/// `{λᵢ(A)·λⱼ(B)}`, so the extremes are extremes over pairwise products.
pub(crate) fn symmetric_product_bounds(a: &Array2<f64>, b: &Array2<f64>) -> (f64, f64) {
    let n = a.nrows();
    let eig_a = symmetric_eigenvalues(DMatrix::from_fn(n, n, |i, j| a[[i, j]]));
    let eig_b = symmetric_eigenvalues(DMatrix::from_fn(n, n, |i, j| b[[i, j]]));
    let mut products = Vec::with_capacity(n * n);
    for &la in &eig_a {
        for &lb in &eig_b {
            products.push(la * lb);
        }
    }
    minmax(&products)
}

/// `W_sym · x` in matrix form: `½(A X Bᵀ + Aᵀ X B)`, flattened column-major.
fn apply_w_sym_f64(a: &Array2<f64>, b: &Array2<f64>, x: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let xm = Array2::from_shape_fn((n, n), |(i, j)| x[j * n + i]);
    let y = crate::quadratic::sym_apply_mat(a, b, &xm);
    DVector::from_fn(n * n, |p, _| y[[p % n, p / n]])
}

/// Matrix-free extremal eigenvalues of `W_sym` by Lanczos iteration with
/// full reorthogonalization.
///
/// Converged when the residual bound `β·|last component of the Ritz vector|`
/// of both extremal Ritz pairs drops below `rel_tol` times the spectral
/// scale. A Krylov space that exhausts the full dimension, or breaks down
/// (β ≈ 0, invariant subspace), yields the exact extremes of the subspace
/// explored, which with a random start vector is the whole story almost
/// surely — `W_sym = 0` and `W_sym = c·I` land here in one step.
pub(crate) fn lanczos_bounds(
    a: &Array2<f64>,
    b: &Array2<f64>,
    rel_tol: f64,
    max_applies: usize,
) -> Result<(f64, f64), String> {
    let n = a.nrows();
    let dim = n * n;
    let m_max = dim.min(MAX_KRYLOV_DIM).min(max_applies.max(1));

    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0f64));
    v /= v.norm();

    let mut basis: Vec<DVector<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    for k in 0..m_max {
        let mut w = apply_w_sym_f64(a, b, &basis[k]);
        let alpha = basis[k].dot(&w);
        alphas.push(alpha);
        w -= &basis[k] * alpha;
        if k > 0 {
            w -= &basis[k - 1] * betas[k - 1];
        }
        // Full reorthogonalization, twice — Lanczos loses orthogonality in
        // finite precision and these bounds must be trustworthy.
        for _ in 0..2 {
            for u in &basis {
                let proj = u.dot(&w);
                w -= u * proj;
            }
        }
        let beta = w.norm();

        let scale = alphas.iter().fold(0.0f64, |s, &x| s.max(x.abs())).max(beta);
        let exhausted = k + 1 == dim;
        let breakdown = beta <= 1e-13 * scale.max(1e-300);
        let check_now = exhausted || breakdown || (k + 1) % 5 == 0 || k + 1 == m_max;
        if check_now {
            let (lo, hi, res_lo, res_hi) = ritz_extremes(&alphas, &betas, beta);
            let spread = hi.abs().max(lo.abs()).max(1e-300);
            if exhausted || breakdown || (res_lo <= rel_tol * spread && res_hi <= rel_tol * spread)
            {
                return Ok((lo, hi));
            }
        }
        betas.push(beta);
        basis.push(w / beta);
    }
    Err(format!(
        "extremal eigenvalues not converged after {m_max} Lanczos steps (limit: min(dimension {dim}, {MAX_KRYLOV_DIM}, {max_applies} applications))"
    ))
}

/// Extremal Ritz values of the current tridiagonal matrix plus their
/// residual bounds `β·|eₘᵀ s|`.
fn ritz_extremes(alphas: &[f64], betas: &[f64], beta_last: f64) -> (f64, f64, f64, f64) {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut lo = (f64::INFINITY, 0usize);
    let mut hi = (f64::NEG_INFINITY, 0usize);
    for (idx, &theta) in eig.eigenvalues.iter().enumerate() {
        if theta < lo.0 {
            lo = (theta, idx);
        }
        if theta > hi.0 {
            hi = (theta, idx);
        }
    }
    let res = |idx: usize| beta_last * eig.eigenvectors[(m - 1, idx)].abs();
    (lo.0, hi.0, res(lo.1), res(hi.1))
}
