//! Ground-truth engines the rest of the crate is tested against.
//!
//! Three oracles, all deliberately naive — exhaustive enumeration and dense
//! closed-form solves, hard size caps, no shared code with the production
//! paths (an oracle that reuses the system's optimizations cannot catch the
//! system's bugs):
//!
//! * [`brute_force`] — the exact QAP optimum by evaluating all n!
//!   permutations. With a zero quadratic part this doubles as the exact
//!   linear-assignment oracle.
//! * [`materialize_w`] — the explicit n²×n² Kronecker product `B ⊗ A`,
//!   entry by entry from the definition.
//! * [`qp_project_oracle`] — the exact Euclidean projection onto the doubly
//!   stochastic set, by enumerating all 2^(n²) active patterns of the
//!   nonnegativity constraints and checking KKT conditions of each
//!   closed-form equality-constrained subproblem.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

use crate::error::Error;
use crate::instance::QapInstance;
use crate::quadratic::evaluate_permutation;
use crate::scalar::Scalar;

/// 10! ≈ 3.6M evaluations is where exhaustive search stops being a tool.
pub const MAX_BRUTE_FORCE_N: usize = 10;
/// Above n = 8 the explicit Kronecker product is 4096×4096 and growing as n⁴.
pub const MAX_MATERIALIZE_N: usize = 8;
/// The active-set enumeration visits 2^(n²) patterns.
pub const MAX_QP_ORACLE_N: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T: Scalar = f64> {
    pub optimum: T,
    /// First permutation (in lexicographic order) attaining the optimum,
    /// 0-indexed.
    pub argmin: Vec<usize>,
    /// Number of permutations evaluated; always n!.
    pub enumerated: usize,
}

/// Exact optimum by exhaustive enumeration in lexicographic order.
pub fn brute_force<T: Scalar>(inst: &QapInstance<T>) -> Result<OracleResult<T>, Error<T>> {
    let n = inst.n();
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::TooLargeForOracle {
            n,
            max: MAX_BRUTE_FORCE_N,
        });
    }
    let mut best: Option<(T, Vec<usize>)> = None;
    let mut enumerated = 0usize;
    for perm in (0..n).permutations(n) {
        let cost = evaluate_permutation(inst, &perm)?;
        enumerated += 1;
        // Strict `<` keeps the lexicographically first argmin on ties.
        match &best {
            Some((b, _)) if cost >= *b => {}
            _ => best = Some((cost, perm)),
        }
    }
    let (optimum, argmin) = best.expect("n ≥ 1 yields at least one permutation");
    Ok(OracleResult {
        optimum,
        argmin,
        enumerated,
    })
}

/// Explicit `B ⊗ A` under the crate's column-major vec convention:
/// `W[(j·n+i), (j'·n+i')] = B[j,j'] · A[i,i']`.
pub fn materialize_w<T: Scalar>(inst: &QapInstance<T>) -> Result<Array2<T>, Error<T>> {
    let n = inst.n();
    if n > MAX_MATERIALIZE_N {
        return Err(Error::TooLargeForOracle {
            n,
            max: MAX_MATERIALIZE_N,
        });
    }
    let (a, b) = (inst.flow(), inst.distance());
    Ok(Array2::from_shape_fn((n * n, n * n), |(p, q)| {
        b[[p / n, q / n]] * a[[p % n, q % n]]
    }))
}

/// Exact Euclidean projection of `x` onto the doubly stochastic set, via
/// active-set enumeration over the nonnegativity pattern.
///
/// For each candidate set S of entries pinned to zero, the remaining
/// equality-constrained least-squares problem
///
/// ```text
///     min ½‖y − x‖²  s.t.  row/col sums = 1,  y_S = 0
/// ```
///
/// is solved in closed form through its normal equations; the first pattern
/// whose solution satisfies both primal feasibility (y ≥ 0) and dual
/// feasibility (multipliers of the pinned entries ≥ 0) is the unique global
/// optimum, because the objective is strictly convex.
pub fn qp_project_oracle<T: Scalar>(x: &Array2<T>) -> Result<Array2<T>, Error<T>> {
    let n = x.nrows();
    if n != x.ncols() {
        return Err(Error::DimensionError {
            expected: n * n,
            got: n * x.ncols(),
        });
    }
    if n > MAX_QP_ORACLE_N {
        return Err(Error::TooLargeForOracle {
            n,
            max: MAX_QP_ORACLE_N,
        });
    }
    let nn = n * n;
    // Equality constraints: n row sums then n column sums, on column-major
    // vec coordinates p = col·n + row.
    let a_eq = DMatrix::<f64>::from_fn(2 * n, nn, |r, p| {
        let (row, col) = (p % n, p / n);
        if (r < n && row == r) || (r >= n && col == r - n) {
            1.0
        } else {
            0.0
        }
    });
    let xv = DVector::<f64>::from_fn(nn, |p, _| x[[p % n, p / n]].to_f64_lossy());
    let kkt_tol = 1e-9;

    for mask in 0u32..(1u32 << nn) {
        // A pattern that pins a whole row or column to zero cannot meet the
        // unit-sum constraints; skip early.
        let mut row_bits = vec![0usize; n];
        let mut col_bits = vec![0usize; n];
        for p in 0..nn {
            if mask & (1 << p) != 0 {
                row_bits[p % n] += 1;
                col_bits[p / n] += 1;
            }
        }
        if row_bits.iter().chain(col_bits.iter()).any(|&k| k == n) {
            continue;
        }

        let free: Vec<usize> = (0..nn).filter(|p| mask & (1 << p) == 0).collect();
        let m = a_eq.select_columns(&free);
        let xf = DVector::from_fn(free.len(), |k, _| xv[free[k]]);
        // Normal equations (M Mᵀ) ν = 1 − M x_F; M Mᵀ is rank-deficient
        // (row and column sums share total mass), so solve by SVD and
        // verify consistency.
        let rhs = DVector::from_element(2 * n, 1.0) - &m * &xf;
        let gram = &m * m.transpose();
        let svd = gram.clone().svd(true, true);
        let nu = match svd.solve(&rhs, 1e-12) {
            Ok(nu) => nu,
            Err(_) => continue,
        };
        if (&gram * &nu - &rhs).norm() > kkt_tol * (1.0 + rhs.norm()) {
            continue; // constraints inconsistent under this pattern
        }
        let yf = &xf + m.transpose() * &nu;
        if yf.iter().any(|&v| v < -kkt_tol) {
            continue; // primal infeasible
        }
        // Dual feasibility on the pinned set: μ_S = −x_S − (A_eqᵀ ν)_S ≥ 0.
        let at_nu = a_eq.transpose() * &nu;
        let dual_ok = (0..nn)
            .filter(|p| mask & (1 << p) != 0)
            .all(|p| -xv[p] - at_nu[p] >= -kkt_tol);
        if !dual_ok {
            continue;
        }

        let mut y = Array2::zeros((n, n));
        for (k, &p) in free.iter().enumerate() {
            y[[p % n, p / n]] = T::cast(yf[k].max(0.0));
        }
        return Ok(y);
    }
    Err(Error::NumericError(
        "active-set enumeration exhausted without a KKT point".into(),
    ))
}
