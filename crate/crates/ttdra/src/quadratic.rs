//! The quadratic assignment objective and its Kronecker-structured operator.
//!
//! With `W = B ⊗ A`, the objective on vectorized matrices is
//! `f(x) = xᵀWx + cᵀx`. This module fixes the vectorization convention for
//! the whole crate and applies W matrix-free.
//!
//! Convention: **column-major vec**. Entry (i, j) of an n×n matrix X lives
//! at vec position `j·n + i` (0-indexed). Under this convention
//!
//! ```text
//!     (B ⊗ A) · vec(X) = vec(A · X · Bᵀ)
//! ```
//!
//! which is the identity every operator here is built on. It is property
//! tested against explicit Kronecker materialization (see the `oracle`
//! module) rather than trusted. A useful consequence, also tested: for any
//! A and B (symmetry not required), `vec(Xπ)ᵀ · W · vec(Xπ)` equals the
//! assignment cost `Σ_{i,j} A[i,j]·B[π(i),π(j)]`.
//!
//! W is never materialized here; dense construction exists only in the test
//! oracle, capped at n = 8.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::Error;
use crate::instance::{validate_permutation, QapInstance};
use crate::scalar::Scalar;

/// Vec position of matrix entry (row, col) under the column-major
/// convention, 0-indexed.
#[inline]
pub fn vec_index(n: usize, row: usize, col: usize) -> usize {
    col * n + row
}

/// Column-major flatten.
pub fn mat_to_vec<T: Scalar>(x: &Array2<T>) -> Array1<T> {
    let n = x.nrows();
    debug_assert_eq!(n, x.ncols());
    Array1::from_shape_fn(n * n, |p| x[[p % n, p / n]])
}

/// Inverse of [`mat_to_vec`].
pub fn vec_to_mat<T: Scalar>(x: ArrayView1<'_, T>, n: usize) -> Result<Array2<T>, Error<T>> {
    if x.len() != n * n {
        return Err(Error::DimensionError {
            expected: n * n,
            got: x.len(),
        });
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| x[vec_index(n, i, j)]))
}

/// The permutation matrix Xπ with Xπ[i, π(i)] = 1.
pub fn permutation_matrix<T: Scalar>(perm: &[usize]) -> Array2<T> {
    let n = perm.len();
    let mut x = Array2::zeros((n, n));
    for (i, &j) in perm.iter().enumerate() {
        x[[i, j]] = T::one();
    }
    x
}

fn check_len<T: Scalar>(inst: &QapInstance<T>, x: ArrayView1<'_, T>) -> Result<(), Error<T>> {
    let expected = inst.n() * inst.n();
    if x.len() != expected {
        return Err(Error::DimensionError {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// Assignment cost `Σ_{i,j} A[i,j]·B[π(i),π(j)] + Σ_i c[vec(i, π(i))]`
/// (permutation 0-indexed).
pub fn evaluate_permutation<T: Scalar>(
    inst: &QapInstance<T>,
    perm: &[usize],
) -> Result<T, Error<T>> {
    let n = inst.n();
    validate_permutation(perm, n)?;
    let (a, b, c) = (inst.flow(), inst.distance(), inst.linear());
    let mut total = T::zero();
    for i in 0..n {
        for j in 0..n {
            total += a[[i, j]] * b[[perm[i], perm[j]]];
        }
        total += c[vec_index(n, i, perm[i])];
    }
    Ok(total)
}

/// `(B ⊗ A) · x`, computed as `vec(A · X · Bᵀ)` without forming the n²×n²
/// matrix.
pub fn apply_w<T: Scalar>(inst: &QapInstance<T>, x: ArrayView1<'_, T>) -> Result<Array1<T>, Error<T>> {
    check_len(inst, x)?;
    let xm = vec_to_mat(x, inst.n())?;
    let y = inst.flow().dot(&xm).dot(&inst.distance().t());
    Ok(mat_to_vec(&y))
}

/// `((W + Wᵀ)/2) · x = ½·(vec(A X Bᵀ) + vec(Aᵀ X B))`. Equals [`apply_w`]
/// when A and B are symmetric.
pub fn apply_w_sym<T: Scalar>(
    inst: &QapInstance<T>,
    x: ArrayView1<'_, T>,
) -> Result<Array1<T>, Error<T>> {
    check_len(inst, x)?;
    let xm = vec_to_mat(x, inst.n())?;
    let y = sym_apply_mat(inst.flow(), inst.distance(), &xm);
    Ok(mat_to_vec(&y))
}

/// Matrix-form symmetric apply `½(A X Bᵀ + Aᵀ X B)`; shared with the solver,
/// which works on un-vectorized iterates.
pub(crate) fn sym_apply_mat<T: Scalar>(a: &Array2<T>, b: &Array2<T>, x: &Array2<T>) -> Array2<T> {
    let half = T::cast(0.5);
    let y = a.dot(x).dot(&b.t()) + a.t().dot(x).dot(b);
    y.mapv(|v| v * half)
}

/// `xᵀWx + cᵀx`.
pub fn objective_vec<T: Scalar>(inst: &QapInstance<T>, x: ArrayView1<'_, T>) -> Result<T, Error<T>> {
    let wx = apply_w(inst, x)?;
    Ok(x.dot(&wx) + inst.linear().dot(&x))
}
