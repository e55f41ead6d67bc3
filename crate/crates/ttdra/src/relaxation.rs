//! Strongly convex relaxation of the quadratic assignment objective.
//!
//! Starting from `f(x) = xᵀWx + cᵀx` with `W = B ⊗ A`, we pass to the
//! symmetrized operator `W_sym = (W + Wᵀ)/2` (same quadratic form) and add a
//! diagonal shift `t = max(0, σ/2 − μ_min(W_sym))`:
//!
//! ```text
//! f̃(x) = xᵀ W_sym x + t‖x‖² + cᵀx − t·n
//! ```
//!
//! Every permutation matrix has `‖x‖² = n`, so `f̃` and `f` agree exactly on
//! assignments, while on the doubly stochastic polytope `‖x‖² ≤ n` gives
//! `f̃ ≤ f`: the minimum of `f̃` is a valid lower bound. The shifted Hessian
//! `2(W_sym + tI)` has smallest eigenvalue ≥ σ, making `f̃` σ-strongly
//! convex, which is what the trigger-count schedule of the reduction solver
//! relies on. If the relaxation's minimizer is itself a permutation matrix,
//! it is a global minimizer of the original problem.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::Error;
use crate::instance::QapInstance;
use crate::projection::{project_ds, DEFAULT_MAX_SWEEPS};
use crate::quadratic::{apply_w_sym, vec_index};
use crate::scalar::Scalar;
use crate::spectral;

/// Largest instance size for which the dense spectral strategy will
/// materialize the n²×n² operator.
pub const DENSE_SPECTRAL_MAX_N: usize = 50;
/// Relative tolerance for the matrix-free (Lanczos) spectral strategy.
pub const ITERATIVE_SPECTRAL_TOL: f64 = 1e-8;
/// Frobenius-distance threshold under which a relaxation minimizer is
/// declared to *be* a permutation matrix.
pub const CERTIFY_TOL: f64 = 1e-6;
/// Default convergence tolerance for [`solve_relaxation`] (relative change
/// of the iterate between successive projected steps).
pub const DEFAULT_RELAXATION_TOL: f64 = 1e-10;
/// Default iteration cap for [`solve_relaxation`].
pub const DEFAULT_RELAXATION_MAX_ITERS: usize = 10_000;

/// How extremal eigenvalues of `W_sym` are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralStrategy {
    /// Symmetric A, B: exact pairwise eigenvalue products. Otherwise dense
    /// up to [`DENSE_SPECTRAL_MAX_N`], Lanczos beyond.
    Auto,
    /// Materialized `W_sym` and a full eigensolve; errors above
    /// [`DENSE_SPECTRAL_MAX_N`].
    Dense,
    /// Matrix-free Lanczos iteration at any size.
    Iterative,
}

/// Extremal eigenvalues `(μ_min, μ_max)` of `W_sym = (B⊗A + (B⊗A)ᵀ)/2`.
pub fn spectral_bounds<T: Scalar>(
    instance: &QapInstance<T>,
    strategy: SpectralStrategy,
) -> Result<(T, T), Error<T>> {
    spectral_bounds_ab(instance.flow(), instance.distance(), strategy)
}

/// [`spectral_bounds`] on raw coefficient matrices; the reduction solver
/// calls this on principal submatrices without rebuilding an instance.
pub(crate) fn spectral_bounds_ab<T: Scalar>(
    a: &Array2<T>,
    b: &Array2<T>,
    strategy: SpectralStrategy,
) -> Result<(T, T), Error<T>> {
    let n = a.nrows();
    let a64 = spectral::to_f64_mat(a);
    let b64 = spectral::to_f64_mat(b);
    let symmetric = a64 == a64.t() && b64 == b64.t();
    let (lo, hi) = match strategy {
        SpectralStrategy::Dense => {
            if n > DENSE_SPECTRAL_MAX_N {
                return Err(Error::StrategyTooLarge {
                    n,
                    max: DENSE_SPECTRAL_MAX_N,
                });
            }
            spectral::dense_bounds(&a64, &b64)
        }
        SpectralStrategy::Iterative => {
            spectral::lanczos_bounds(&a64, &b64, ITERATIVE_SPECTRAL_TOL, 10 * n * n)
                .map_err(Error::SpectralFailure)?
        }
        SpectralStrategy::Auto => {
            if symmetric {
                spectral::symmetric_product_bounds(&a64, &b64)
            } else if n <= DENSE_SPECTRAL_MAX_N {
                spectral::dense_bounds(&a64, &b64)
            } else {
                spectral::lanczos_bounds(&a64, &b64, ITERATIVE_SPECTRAL_TOL, 10 * n * n)
                    .map_err(Error::SpectralFailure)?
            }
        }
    };
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::SpectralFailure(format!(
            "non-finite spectral bounds ({lo}, {hi})"
        )));
    }
    Ok((T::cast(lo), T::cast(hi)))
}

/// A σ-strongly-convex relaxation of one instance's objective.
#[derive(Debug, Clone)]
pub struct RelaxedProblem<'a, T: Scalar = f64> {
    instance: &'a QapInstance<T>,
    sigma: T,
    mu_min: T,
    mu_max: T,
    shift: T,
    constant: T,
}

impl<'a, T: Scalar> RelaxedProblem<'a, T> {
    pub fn instance(&self) -> &'a QapInstance<T> {
        self.instance
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    /// Strong convexity parameter σ the shift was chosen for.
    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Extremal eigenvalues of the *unshifted* `W_sym`.
    pub fn bounds(&self) -> (T, T) {
        (self.mu_min, self.mu_max)
    }

    /// Extremal eigenvalues of the shifted operator `W̃ = W_sym + shift·I`.
    pub fn shifted_bounds(&self) -> (T, T) {
        (self.mu_min + self.shift, self.mu_max + self.shift)
    }

    /// Diagonal shift `t = max(0, σ/2 − μ_min)`.
    pub fn shift(&self) -> T {
        self.shift
    }

    /// Additive constant `−t·n` that restores equality with the original
    /// objective on permutation matrices.
    pub fn constant(&self) -> T {
        self.constant
    }
}

/// Build the relaxation, computing spectral bounds with the given strategy.
pub fn build_relaxed_with<T: Scalar>(
    instance: &QapInstance<T>,
    sigma: T,
    strategy: SpectralStrategy,
) -> Result<RelaxedProblem<'_, T>, Error<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    let (mu_min, mu_max) = spectral_bounds(instance, strategy)?;
    let half_sigma = sigma / T::cast(2.0);
    let shift = if half_sigma > mu_min {
        half_sigma - mu_min
    } else {
        T::zero()
    };
    let constant = -shift * T::cast(instance.n() as f64);
    Ok(RelaxedProblem {
        instance,
        sigma,
        mu_min,
        mu_max,
        shift,
        constant,
    })
}

/// [`build_relaxed_with`] using the [`SpectralStrategy::Auto`] strategy.
pub fn build_relaxed<T: Scalar>(
    instance: &QapInstance<T>,
    sigma: T,
) -> Result<RelaxedProblem<'_, T>, Error<T>> {
    build_relaxed_with(instance, sigma, SpectralStrategy::Auto)
}

fn check_vec_len<T: Scalar>(problem: &RelaxedProblem<'_, T>, x: &Array1<T>) -> Result<(), Error<T>> {
    let nn = problem.n() * problem.n();
    if x.len() != nn {
        return Err(Error::DimensionError {
            expected: nn,
            got: x.len(),
        });
    }
    Ok(())
}

/// `f̃(x) = xᵀW_sym x + shift·‖x‖² + cᵀx + constant`, on column-major
/// vectorized iterates.
pub fn relaxed_objective<T: Scalar>(
    problem: &RelaxedProblem<'_, T>,
    x: &Array1<T>,
) -> Result<T, Error<T>> {
    check_vec_len(problem, x)?;
    let wx = apply_w_sym(problem.instance, x.view())?;
    let quad: T = x.iter().zip(wx.iter()).map(|(&p, &q)| p * q).sum();
    let sq: T = x.iter().map(|&v| v * v).sum();
    let lin: T = x
        .iter()
        .zip(problem.instance.linear().iter())
        .map(|(&p, &q)| p * q)
        .sum();
    Ok(quad + problem.shift * sq + lin + problem.constant)
}

/// `∇f̃(x) = 2(W_sym x + shift·x) + c`.
pub fn relaxed_gradient<T: Scalar>(
    problem: &RelaxedProblem<'_, T>,
    x: &Array1<T>,
) -> Result<Array1<T>, Error<T>> {
    check_vec_len(problem, x)?;
    let wx = apply_w_sym(problem.instance, x.view())?;
    let two = T::cast(2.0);
    let mut g = Array1::zeros(x.len());
    for (i, gi) in g.iter_mut().enumerate() {
        *gi = two * (wx[i] + problem.shift * x[i]) + problem.instance.linear()[i];
    }
    Ok(g)
}

/// Outcome of projected steepest descent on the relaxation over the doubly
/// stochastic polytope.
#[derive(Debug, Clone)]
pub struct RelaxationSolution<T: Scalar = f64> {
    /// Final iterate, vectorized column-major; certified doubly stochastic.
    pub x: Array1<T>,
    /// `f̃` at the final iterate — a lower bound on the assignment optimum
    /// once converged.
    pub bound: T,
    /// Projected gradient steps taken.
    pub iterations: usize,
    /// Whether the relative-change stopping test fired before `max_iters`.
    pub converged: bool,
    /// Converged to a point within [`CERTIFY_TOL`] (Frobenius) of a
    /// permutation matrix — which is then a global minimizer of the
    /// original assignment objective.
    pub certified_optimal: bool,
}

/// Projected steepest descent with exact line search on `f̃` over the doubly
/// stochastic polytope, from the barycenter start `J/n`.
///
/// Stops when the iterate moves less than `tol·(1 + ‖x‖)` in one projected
/// step. Hitting `max_iters` is not an error: the result is returned with
/// `converged = false` (its `bound` is then best-effort, not certified).
pub fn solve_relaxation<T: Scalar>(
    problem: &RelaxedProblem<'_, T>,
    tol: f64,
    max_iters: usize,
) -> Result<RelaxationSolution<T>, Error<T>> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "relaxation tolerance must be positive and finite, got {tol}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidConfig(
            "relaxation iteration cap must be at least 1".into(),
        ));
    }
    let n = problem.n();
    let nn = n * n;
    let mut x: Array1<T> = Array1::from_elem(nn, T::cast(1.0 / n as f64));
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..max_iters {
        let g = relaxed_gradient(problem, &x)?;
        let gnorm_sq: T = g.iter().map(|&v| v * v).sum();
        if gnorm_sq == T::zero() {
            converged = true;
            break;
        }
        let alpha = crate::solver::step_size(problem, &g)?;
        let mut stepped = Array2::zeros((n, n));
        for j in 0..n {
            for i in 0..n {
                let p = vec_index(n, i, j);
                stepped[[i, j]] = x[p] - alpha * g[p];
            }
        }
        let projected = project_ds(
            &stepped,
            T::cast(crate::projection::DEFAULT_PROJECTION_TOL),
            DEFAULT_MAX_SWEEPS,
        )?;
        let y = projected.into_matrix();
        iterations += 1;

        let mut delta = T::zero();
        let mut xnorm = T::zero();
        for j in 0..n {
            for i in 0..n {
                let p = vec_index(n, i, j);
                let d = y[[i, j]] - x[p];
                delta = delta + d * d;
                xnorm = xnorm + x[p] * x[p];
                x[p] = y[[i, j]];
            }
        }
        if delta.sqrt() <= T::cast(tol) * (T::one() + xnorm.sqrt()) {
            converged = true;
            break;
        }
    }

    let bound = relaxed_objective(problem, &x)?;
    let certified_optimal = converged && is_near_permutation(&x, n);
    Ok(RelaxationSolution {
        x,
        bound,
        iterations,
        converged,
        certified_optimal,
    })
}

/// [`solve_relaxation`] with the module's default tolerance and cap.
pub fn solve_relaxation_default<T: Scalar>(
    problem: &RelaxedProblem<'_, T>,
) -> Result<RelaxationSolution<T>, Error<T>> {
    solve_relaxation(problem, DEFAULT_RELAXATION_TOL, DEFAULT_RELAXATION_MAX_ITERS)
}

/// Does the row-wise argmax of `vec⁻¹(x)` form a permutation within
/// [`CERTIFY_TOL`] in Frobenius distance?
fn is_near_permutation<T: Scalar>(x: &Array1<T>, n: usize) -> bool {
    let mut col_of_row = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for i in 0..n {
        let mut best = (T::neg_infinity(), 0usize);
        for j in 0..n {
            let v = x[vec_index(n, i, j)];
            if v > best.0 {
                best = (v, j);
            }
        }
        if taken[best.1] {
            return false;
        }
        taken[best.1] = true;
        col_of_row[i] = best.1;
    }
    let mut dist_sq = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if col_of_row[i] == j { 1.0 } else { 0.0 };
            let d = x[vec_index(n, i, j)].to_f64_lossy() - target;
            dist_sq += d * d;
        }
    }
    dist_sq.sqrt() <= CERTIFY_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratic::{evaluate_permutation, mat_to_vec, permutation_matrix};
    use ndarray::array;

    fn small_instance() -> QapInstance<f64> {
        let a = array![[0.0, 3.0], [3.0, 0.0]];
        let b = array![[0.0, 1.0], [1.0, 0.0]];
        QapInstance::new("t2", a, b).unwrap()
    }

    #[test]
    fn shift_is_clamped_at_zero_when_spectrum_already_high() {
        // W_sym = I has μ_min = 1; σ = 1 asks only for ≥ 0.5.
        let a: Array2<f64> = Array2::eye(2);
        let b: Array2<f64> = Array2::eye(2);
        let inst = QapInstance::new("eye", a, b).unwrap();
        let rp = build_relaxed(&inst, 1.0).unwrap();
        assert_eq!(rp.shift(), 0.0);
        assert_eq!(rp.constant(), 0.0);
        assert_eq!(rp.bounds(), (1.0, 1.0));
        assert_eq!(rp.shifted_bounds(), (1.0, 1.0));
    }

    #[test]
    fn shift_tops_up_to_half_sigma() {
        let inst = small_instance();
        // Symmetric A, B with eigenvalues {±3} and {±1}: products {±3}, so
        // μ_min = −3, μ_max = 3.
        let rp = build_relaxed(&inst, 10.0).unwrap();
        assert!((rp.bounds().0 + 3.0).abs() < 1e-9);
        assert!((rp.bounds().1 - 3.0).abs() < 1e-9);
        assert!((rp.shift() - 8.0).abs() < 1e-9); // 10/2 − (−3)
        assert!((rp.constant() + 16.0).abs() < 1e-9); // −8·2
        let (lo, hi) = rp.shifted_bounds();
        assert!((lo - 5.0).abs() < 1e-9);
        assert!((hi - 11.0).abs() < 1e-9);
    }

    #[test]
    fn relaxed_objective_matches_original_on_permutations() {
        let inst = small_instance();
        let rp = build_relaxed(&inst, 50.0).unwrap();
        for perm in [vec![0usize, 1], vec![1, 0]] {
            let x = mat_to_vec(&permutation_matrix::<f64>(&perm));
            let f_tilde = relaxed_objective(&rp, &x).unwrap();
            let f: f64 = evaluate_permutation(&inst, &perm).unwrap();
            assert!(
                (f_tilde - f).abs() < 1e-9,
                "perm {perm:?}: {f_tilde} vs {f}"
            );
        }
    }

    #[test]
    fn relaxed_objective_underestimates_on_interior_points() {
        let inst = small_instance();
        let rp = build_relaxed(&inst, 50.0).unwrap();
        let x = Array1::from_elem(4, 0.5); // barycenter, ‖x‖² = 1 < 2
        let f_tilde = relaxed_objective(&rp, &x).unwrap();
        // Original objective at the barycenter.
        let wx = crate::quadratic::apply_w(&inst, x.view()).unwrap();
        let f: f64 = x.iter().zip(wx.iter()).map(|(p, q)| p * q).sum();
        assert!(f_tilde < f);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a = array![[1.0, 2.0], [4.0, 3.0]];
        let b = array![[2.0, -1.0], [0.5, 1.0]];
        let c = Array1::from_vec(vec![0.3, -0.2, 1.0, 0.7]);
        let inst = QapInstance::with_linear("fd", a, b, c).unwrap();
        let rp = build_relaxed(&inst, 8.0).unwrap();
        let x = Array1::from_vec(vec![0.2, 0.8, 0.8, 0.2]);
        let g = relaxed_gradient(&rp, &x).unwrap();
        let h = 1e-6;
        for k in 0..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd: f64 = (relaxed_objective(&rp, &xp).unwrap()
                - relaxed_objective(&rp, &xm).unwrap())
                / (2.0 * h);
            assert!(
                (fd - g[k]).abs() < 1e-4 * (1.0 + fd.abs()),
                "k={k}: fd {fd} vs analytic {}",
                g[k]
            );
        }
    }

    #[test]
    fn strategies_agree_on_asymmetric_input() {
        let a = array![[0.0, 5.0, 1.0], [2.0, 0.0, 3.0], [4.0, 1.0, 0.0]];
        let b = array![[0.0, 1.0, 2.0], [3.0, 0.0, 1.0], [1.0, 2.0, 0.0]];
        let inst: QapInstance = QapInstance::new("asym3", a, b).unwrap();
        let (d_lo, d_hi) = spectral_bounds(&inst, SpectralStrategy::Dense).unwrap();
        let (i_lo, i_hi) = spectral_bounds(&inst, SpectralStrategy::Iterative).unwrap();
        let (a_lo, a_hi) = spectral_bounds(&inst, SpectralStrategy::Auto).unwrap();
        let scale = d_hi.abs().max(d_lo.abs()).max(1.0);
        for (x, y) in [(d_lo, i_lo), (d_hi, i_hi), (d_lo, a_lo), (d_hi, a_hi)] {
            assert!((x - y).abs() < 1e-6 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn dense_strategy_rejects_oversized_instances() {
        let n = DENSE_SPECTRAL_MAX_N + 1;
        let inst: QapInstance =
            QapInstance::new("big", Array2::zeros((n, n)), Array2::zeros((n, n))).unwrap();
        match spectral_bounds(&inst, SpectralStrategy::Dense) {
            Err(Error::StrategyTooLarge { n: got, max }) => {
                assert_eq!(got, n);
                assert_eq!(max, DENSE_SPECTRAL_MAX_N);
            }
            other => panic!("expected StrategyTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let inst = small_instance();
        assert!(matches!(
            build_relaxed(&inst, 0.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            build_relaxed(&inst, -3.0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn relaxation_descends_and_stays_feasible() {
        let a = array![[0.0, 2.0, 7.0], [2.0, 0.0, 4.0], [7.0, 4.0, 0.0]];
        let b = array![[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]];
        let inst = QapInstance::new("t3", a, b).unwrap();
        let rp = build_relaxed(&inst, 100.0).unwrap();
        let sol = solve_relaxation(&rp, 1e-10, 5000).unwrap();
        assert!(sol.converged);
        let xm = crate::quadratic::vec_to_mat(sol.x.view(), 3).unwrap();
        assert!(crate::projection::is_doubly_stochastic(&xm, 1e-8));
        // Bound must sit below every permutation's objective.
        use itertools::Itertools;
        for perm in (0..3).permutations(3) {
            let f: f64 = evaluate_permutation(&inst, &perm).unwrap();
            assert!(
                sol.bound <= f + 1e-7 * (1.0 + f.abs()),
                "bound {} above permutation value {f}",
                sol.bound
            );
        }
    }

    #[test]
    fn pure_linear_instance_with_unique_minima_certifies() {
        // W = 0 and c carrying a dominant negative entry per row at a
        // permutation support: the relaxation minimum is that permutation.
        let n = 3;
        let zero = Array2::<f64>::zeros((n, n));
        let perm = vec![2usize, 0, 1];
        let sigma = 10.0;
        let mut c = Array1::zeros(n * n);
        for i in 0..n {
            for j in 0..n {
                c[vec_index(n, i, j)] = if perm[i] == j {
                    -sigma
                } else {
                    0.5 + (i + 2 * j) as f64
                };
            }
        }
        let inst = QapInstance::with_linear("lin3", zero.clone(), zero, c).unwrap();
        let rp = build_relaxed(&inst, sigma).unwrap();
        let sol = solve_relaxation(&rp, 1e-12, 10_000).unwrap();
        assert!(sol.converged);
        assert!(sol.certified_optimal, "iterate: {:?}", sol.x);
        let expected = evaluate_permutation(&inst, &perm).unwrap();
        assert!((sol.bound - expected).abs() < 1e-6 * (1.0 + expected.abs()));
    }

    #[test]
    fn hitting_iteration_cap_reports_not_converged() {
        // An asymmetric objective whose minimizer is away from the
        // barycenter start, at moderate σ: contraction is geometric, so
        // three steps cannot possibly meet an absurdly tight tolerance.
        // (The 2×2 symmetric case would be useless here: its relaxation
        // minimizer *is* the start point.)
        let a = array![[0.0, 5.0, 1.0], [2.0, 0.0, 3.0], [4.0, 1.0, 0.0]];
        let b = array![[0.0, 1.0, 2.0], [3.0, 0.0, 1.0], [1.0, 2.0, 0.0]];
        let c = Array1::from_vec(vec![3.0, -1.0, 0.0, 2.0, 0.5, -2.0, 1.0, 0.0, -0.5]);
        let inst = QapInstance::with_linear("cap3", a, b, c).unwrap();
        let rp = build_relaxed(&inst, 50.0).unwrap();
        let sol = solve_relaxation(&rp, 1e-300, 3).unwrap();
        assert!(!sol.converged);
        assert!(!sol.certified_optimal);
        assert_eq!(sol.iterations, 3);
    }
}
