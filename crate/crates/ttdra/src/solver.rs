//! Time-triggered dimension reduction: the assignment solver.
//!
//! One strongly convex relaxation is built for the full instance (see the
//! [`relaxation`](crate::relaxation) module). Projected steepest descent
//! with exact line search runs on it over the doubly stochastic polytope,
//! and every time a step-count trigger fires, the largest entry of the
//! iterate is rounded to an assignment: its row and column are deleted from
//! the iterate and from the coefficient matrices, cross terms are optionally
//! folded into the linear part, and descent resumes on the reduced problem.
//! After n reductions every row is assigned.
//!
//! The trigger count is derived from the linear convergence rate of exact
//! line search on a σ-strongly-convex quadratic with spectrum in
//! `[μ_min, μ_max]`: the objective gap contracts by at least
//! `((μ_max−μ_min)/(μ_max+μ_min))²` per step, so
//!
//! ```text
//! n_iter = ⌈ ln(1/ε) / (2 ln((μ_max+μ_min)/(μ_max−μ_min))) ⌉
//! ```
//!
//! steps shrink it by ε. The count is clamped to `[1, η]`; a collapsed
//! spectrum (`μ_min = μ_max`, one-step convergence) maps to 1 and a
//! vanishing relative gap maps to η.
//!
//! Everything in the loop works on n×n matrices — iterate `X`, gradient
//! `G = 2(½(AXBᵀ+AᵀXB) + tX) + C` — never on materialized n²×n² operators.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use serde::{Serialize, Serializer};

use crate::error::Error;
use crate::instance::{AssignmentResult, QapInstance};
use crate::projection::{project_ds, DEFAULT_MAX_SWEEPS, DEFAULT_PROJECTION_TOL};
use crate::quadratic::{evaluate_permutation, sym_apply_mat, vec_index};
use crate::relaxation::{spectral_bounds_ab, RelaxedProblem, SpectralStrategy};
use crate::scalar::Scalar;

/// Default strong-convexity target σ.
pub const DEFAULT_SIGMA: f64 = 1e6;
/// Default trigger accuracy ε.
pub const DEFAULT_EPSILON: f64 = 0.5;
/// Default trigger iteration cap η.
pub const DEFAULT_ETA: usize = 100;
/// Relative tolerance for the monotone-descent invariant (for `f64`;
/// scalars with coarser machine epsilon fall back to a small multiple of
/// it so the check stays meaningful).
pub const DESCENT_TOL: f64 = 1e-9;

/// Whether spectral bounds are recomputed after each reduction.
///
/// Either policy keeps the strong-convexity invariant: the reduced cost
/// operator is a principal submatrix of the previous one, so by eigenvalue
/// interlacing its spectrum can only contract. `Reuse` keeps the level-0
/// bounds (free, conservative trigger counts); `Recompute` re-runs the
/// spectral engine on the reduced matrices for tighter counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralRefresh {
    Reuse,
    Recompute,
}

/// Tuning knobs for [`solve`]. Construct with [`SolverConfig::default`] and
/// override fields; `validate` runs automatically at the top of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Strong convexity target σ for the relaxation (> 0).
    pub sigma: f64,
    /// Trigger accuracy ε ∈ (0, 1]: the relative objective-gap contraction
    /// demanded between reductions.
    pub epsilon: f64,
    /// Hard cap η ≥ 1 on the per-level trigger count.
    pub eta: usize,
    /// Step count before the first reduction (default: η).
    pub initial_niter: usize,
    /// Feasibility tolerance handed to the doubly stochastic projection.
    pub proj_tol: f64,
    /// Fold the fixed row/column's cross terms into the reduced linear term
    /// instead of dropping them.
    pub fold_cross_terms: bool,
    /// Spectral bound refresh policy after each reduction.
    pub spectral_refresh: SpectralRefresh,
    /// Engine used for spectral bounds (initial, and per level under
    /// `Recompute`).
    pub spectral_strategy: SpectralStrategy,
    /// Wall-clock budget; exceeding it aborts with the partial assignment.
    #[serde(rename = "max_wall_time_s", serialize_with = "ser_opt_duration")]
    pub max_wall_time: Option<Duration>,
}

fn ser_opt_duration<S: Serializer>(v: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(d) => s.serialize_some(&d.as_secs_f64()),
        None => s.serialize_none(),
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            sigma: DEFAULT_SIGMA,
            epsilon: DEFAULT_EPSILON,
            eta: DEFAULT_ETA,
            initial_niter: DEFAULT_ETA,
            proj_tol: DEFAULT_PROJECTION_TOL,
            fold_cross_terms: false,
            spectral_refresh: SpectralRefresh::Reuse,
            spectral_strategy: SpectralStrategy::Auto,
            max_wall_time: None,
        }
    }
}

impl SolverConfig {
    pub fn validate<T: Scalar>(&self) -> Result<(), Error<T>> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if self.eta == 0 {
            return Err(Error::InvalidConfig("eta must be at least 1".into()));
        }
        if self.initial_niter == 0 {
            return Err(Error::InvalidConfig(
                "initial_niter must be at least 1".into(),
            ));
        }
        if !(self.proj_tol > 0.0) || !self.proj_tol.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "proj_tol must be positive and finite, got {}",
                self.proj_tol
            )));
        }
        Ok(())
    }
}

/// Steps of exact-line-search descent needed to contract the objective gap
/// by ε on a quadratic with (positive) spectrum in `[μ_min, μ_max]`,
/// clamped to `[1, η]`.
///
/// `μ_min = μ_max` converges in one exact step, so the count is 1; as
/// `μ_min/μ_max → 0` the per-step rate degenerates and the count saturates
/// at η.
pub fn trigger_count<T: Scalar>(
    mu_min: T,
    mu_max: T,
    epsilon: f64,
    eta: usize,
) -> Result<usize, Error<T>> {
    let lo = mu_min.to_f64_lossy();
    let hi = mu_max.to_f64_lossy();
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InvalidSpectrum(format!(
            "bounds must be ordered finite reals, got ({lo}, {hi})"
        )));
    }
    if lo <= 0.0 {
        return Err(Error::InvalidSpectrum(format!(
            "trigger formula needs a positive spectrum (shifted operator), got mu_min = {lo}"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if eta == 0 {
        return Err(Error::InvalidConfig("eta must be at least 1".into()));
    }
    if lo == hi {
        return Ok(1);
    }
    // ln((hi+lo)/(hi−lo)) computed as ln(1 + 2·lo/(hi−lo)) for accuracy when
    // lo ≪ hi, where the ratio is barely above 1.
    let denom = 2.0 * (2.0 * lo / (hi - lo)).ln_1p();
    let num = -epsilon.ln();
    let raw = (num / denom).ceil();
    if !raw.is_finite() || raw >= eta as f64 {
        return Ok(eta);
    }
    Ok((raw as usize).max(1))
}

/// Exact line-search step `α = gᵀg / (gᵀHg)` for the relaxation's Hessian
/// `H = 2(W_sym + t·I)`, evaluated matrix-free.
///
/// `g` is the (vectorized, column-major) gradient at the current iterate;
/// the step is exact for quadratics, independent of where it is taken.
pub fn step_size<T: Scalar>(
    problem: &RelaxedProblem<'_, T>,
    g: &Array1<T>,
) -> Result<T, Error<T>> {
    let nn = problem.n() * problem.n();
    if g.len() != nn {
        return Err(Error::DimensionError {
            expected: nn,
            got: g.len(),
        });
    }
    let wg = crate::quadratic::apply_w_sym(problem.instance(), g.view())?;
    let two = T::cast(2.0);
    let mut num = T::zero();
    let mut den = T::zero();
    for i in 0..nn {
        let hg = two * (wg[i] + problem.shift() * g[i]);
        num = num + g[i] * g[i];
        den = den + g[i] * hg;
    }
    if !(den > T::zero()) || !den.is_finite() {
        return Err(Error::ConvexityViolation { value: den });
    }
    Ok(num / den)
}

/// Mutable state of one solve: the reduced coefficient matrices, the
/// doubly stochastic iterate, and the assignment built so far.
///
/// Level l means l rows have been fixed; the live problem has size
/// `n − l`. Row/column indices of the live matrices are positions into
/// [`active_rows`](Self::active_rows) / [`active_cols`](Self::active_cols),
/// which map back to original indices.
#[derive(Debug, Clone)]
pub struct ReductionState<T: Scalar = f64> {
    n0: usize,
    level: usize,
    a: Array2<T>,
    b: Array2<T>,
    /// Reduced linear term in matrix layout: `c_mat[[i, j]] = c[vec(i, j)]`.
    c_mat: Array2<T>,
    x: Array2<T>,
    shift: T,
    /// Spectral bounds of the *shifted* operator `W̃ = W_sym + shift·I` in
    /// force at this level (exact at level 0; conservative under `Reuse`).
    mu: (T, T),
    niter: usize,
    partial: Vec<Option<usize>>,
    active_rows: Vec<usize>,
    active_cols: Vec<usize>,
}

impl<T: Scalar> ReductionState<T> {
    /// Build level-0 state: barycenter iterate, full coefficient matrices,
    /// spectral bounds and shift from the configured strategy and σ.
    pub fn new(instance: &QapInstance<T>, config: &SolverConfig) -> Result<Self, Error<T>> {
        config.validate()?;
        let n = instance.n();
        let (mu_min, mu_max) = spectral_bounds_ab(
            instance.flow(),
            instance.distance(),
            config.spectral_strategy,
        )?;
        let half_sigma = T::cast(config.sigma / 2.0);
        let shift = if half_sigma > mu_min {
            half_sigma - mu_min
        } else {
            T::zero()
        };
        let c_mat = Array2::from_shape_fn((n, n), |(i, j)| {
            instance.linear()[vec_index(n, i, j)]
        });
        Ok(ReductionState {
            n0: n,
            level: 0,
            a: instance.flow().clone(),
            b: instance.distance().clone(),
            c_mat,
            x: Array2::from_elem((n, n), T::cast(1.0 / n as f64)),
            shift,
            mu: (mu_min + shift, mu_max + shift),
            niter: config.initial_niter,
            partial: vec![None; n],
            active_rows: (0..n).collect(),
            active_cols: (0..n).collect(),
        })
    }

    /// Original instance size.
    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Number of rows fixed so far.
    pub fn level(&self) -> usize {
        self.level
    }

    /// Size of the live reduced problem, `n0 − level`.
    pub fn remaining(&self) -> usize {
        self.n0 - self.level
    }

    /// Reduced flow matrix (principal submatrix of the original).
    pub fn flow(&self) -> &Array2<T> {
        &self.a
    }

    /// Reduced distance matrix (principal submatrix of the original).
    pub fn distance(&self) -> &Array2<T> {
        &self.b
    }

    /// Reduced linear term, in matrix layout (`[[i, j]]` ↔ `c[vec(i, j)]`).
    pub fn linear(&self) -> &Array2<T> {
        &self.c_mat
    }

    /// Current doubly stochastic iterate.
    pub fn iterate(&self) -> &Array2<T> {
        &self.x
    }

    /// Diagonal shift fixed at level 0 (never recomputed: interlacing keeps
    /// it sufficient at every level).
    pub fn shift(&self) -> T {
        self.shift
    }

    /// Shifted spectral bounds in force for the trigger formula.
    pub fn mu(&self) -> (T, T) {
        self.mu
    }

    /// Trigger count in force at this level.
    pub fn niter(&self) -> usize {
        self.niter
    }

    /// Assignment built so far: `partial[i] = Some(j)` fixes original row i
    /// to original column j.
    pub fn partial(&self) -> &[Option<usize>] {
        &self.partial
    }

    /// Original row indices still live, in live order.
    pub fn active_rows(&self) -> &[usize] {
        &self.active_rows
    }

    /// Original column indices still live, in live order.
    pub fn active_cols(&self) -> &[usize] {
        &self.active_cols
    }

    /// Reduced relaxed objective at the current iterate, *without* the
    /// level-0 additive constant (constants never affect steps, triggers,
    /// or argmax picks).
    pub fn value(&self) -> T {
        let s = sym_apply_mat(&self.a, &self.b, &self.x);
        let mut f = T::zero();
        for (idx, &xv) in self.x.indexed_iter() {
            f = f + xv * (s[idx] + self.shift * xv) + self.c_mat[idx] * xv;
        }
        f
    }

    /// Objective (as in [`value`](Self::value)) and gradient
    /// `2(W_sym x + t·x) + c`, from one shared operator application.
    pub fn value_and_gradient(&self) -> (T, Array2<T>) {
        let s = sym_apply_mat(&self.a, &self.b, &self.x);
        let two = T::cast(2.0);
        let mut f = T::zero();
        let mut g = Array2::zeros(self.x.raw_dim());
        for (idx, &xv) in self.x.indexed_iter() {
            let wsx = s[idx] + self.shift * xv;
            f = f + xv * wsx + self.c_mat[idx] * xv;
            g[idx] = two * wsx + self.c_mat[idx];
        }
        (f, g)
    }

    /// Exact line-search step length for gradient `g` on the reduced
    /// problem.
    pub fn step_size_for(&self, g: &Array2<T>) -> Result<T, Error<T>> {
        let s = sym_apply_mat(&self.a, &self.b, g);
        let two = T::cast(2.0);
        let mut num = T::zero();
        let mut den = T::zero();
        for (idx, &gv) in g.indexed_iter() {
            let hg = two * (s[idx] + self.shift * gv);
            num = num + gv * gv;
            den = den + gv * hg;
        }
        if num == T::zero() {
            // Zero gradient: any step length is a fixed point; report unit.
            return Ok(T::one());
        }
        if !(den > T::zero()) || !den.is_finite() {
            return Err(Error::ConvexityViolation { value: den });
        }
        Ok(num / den)
    }

    /// One projected steepest-descent step. Returns the objective value at
    /// the point the step was taken from.
    fn descend_step(&mut self, proj_tol: f64) -> Result<T, Error<T>> {
        let (f_before, g) = self.value_and_gradient();
        let alpha = self.step_size_for(&g)?;
        let stepped = Array2::from_shape_fn(self.x.raw_dim(), |idx| {
            self.x[idx] - alpha * g[idx]
        });
        let projected = project_ds(&stepped, T::cast(proj_tol), DEFAULT_MAX_SWEEPS)?;
        self.x = projected.into_matrix();
        Ok(f_before)
    }

    /// Fix the iterate's largest entry as an assignment and shrink the
    /// problem by one row and column.
    ///
    /// Ties in the argmax resolve to the smallest live row index, then the
    /// smallest live column index. With `fold_cross_terms` the fixed pair's
    /// interaction with every surviving pair is folded into the linear term
    /// (`c[(i,j)] += A[i,r]·B[j,c] + A[r,i]·B[c,j]`) before deletion, so the
    /// reduced objective tracks the original conditioned on the fix;
    /// otherwise the cross terms are dropped. Afterwards the shrunken
    /// iterate is re-projected and, under `Recompute`, spectral bounds are
    /// refreshed on the reduced matrices. The shift stays fixed at its
    /// level-0 value: by Cauchy interlacing the smallest eigenvalue of a
    /// principal submatrix can only rise, so λ_min(W̃) ≥ σ/2 keeps holding.
    pub fn reduce(&mut self, config: &SolverConfig) -> Result<(), Error<T>> {
        let m = self.remaining();
        assert!(m >= 1, "reduce on an exhausted state");

        let (mut br, mut bc, mut best) = (0usize, 0usize, self.x[[0, 0]]);
        for i in 0..m {
            for j in 0..m {
                if self.x[[i, j]] > best {
                    best = self.x[[i, j]];
                    br = i;
                    bc = j;
                }
            }
        }
        let orig_row = self.active_rows[br];
        let orig_col = self.active_cols[bc];
        self.partial[orig_row] = Some(orig_col);

        if config.fold_cross_terms && m > 1 {
            for i in 0..m {
                if i == br {
                    continue;
                }
                for j in 0..m {
                    if j == bc {
                        continue;
                    }
                    let delta = self.a[[i, br]] * self.b[[j, bc]]
                        + self.a[[br, i]] * self.b[[bc, j]];
                    self.c_mat[[i, j]] = self.c_mat[[i, j]] + delta;
                }
            }
        }

        for (mat, idx) in [
            (&mut self.x, (br, bc)),
            (&mut self.c_mat, (br, bc)),
            (&mut self.a, (br, br)),
            (&mut self.b, (bc, bc)),
        ] {
            mat.remove_index(ndarray::Axis(0), idx.0);
            mat.remove_index(ndarray::Axis(1), idx.1);
        }
        self.active_rows.remove(br);
        self.active_cols.remove(bc);
        self.level += 1;

        if self.remaining() >= 1 {
            let projected = project_ds(&self.x, T::cast(config.proj_tol), DEFAULT_MAX_SWEEPS)?;
            self.x = projected.into_matrix();
            if config.spectral_refresh == SpectralRefresh::Recompute {
                let (lo, hi) = spectral_bounds_ab(&self.a, &self.b, config.spectral_strategy)?;
                self.mu = (lo + self.shift, hi + self.shift);
            }
            self.niter = trigger_count(self.mu.0, self.mu.1, config.epsilon, config.eta)?;
        } else {
            self.niter = 0;
        }
        Ok(())
    }
}

/// Solve one instance with time-triggered dimension reduction.
///
/// Runs `initial_niter` projected descent steps, then alternates reductions
/// with trigger-counted step batches until all rows are fixed. The returned
/// objective is recomputed from the original instance and the emitted
/// permutation. `lower_bound` is left unset — pair with
/// [`solve_relaxation`](crate::relaxation::solve_relaxation) for a bound.
pub fn solve<T: Scalar>(
    instance: &QapInstance<T>,
    config: &SolverConfig,
) -> Result<AssignmentResult<T>, Error<T>> {
    solve_observed(instance, config, |_| {})
}

/// [`solve`] with an observer invoked on the state immediately before every
/// reduction — n calls, at levels 0 through n−1, in order. Lets callers
/// audit per-level quantities (spectral bounds, shift, trigger counts,
/// iterate feasibility) without re-running the loop themselves.
pub fn solve_observed<T, F>(
    instance: &QapInstance<T>,
    config: &SolverConfig,
    mut observer: F,
) -> Result<AssignmentResult<T>, Error<T>>
where
    T: Scalar,
    F: FnMut(&ReductionState<T>),
{
    let started = Instant::now();
    let n = instance.n();
    let mut state = ReductionState::new(instance, config)?;
    let mut gradient_steps = 0usize;
    let mut reductions = 0usize;
    let mut count = 0usize;
    // Last objective value seen at the current level, for the monotonicity
    // check. Reset at each reduction: the reduced objective lives on a
    // different space.
    let mut f_prev: Option<T> = None;
    let descent_tol = T::cast(DESCENT_TOL.max(64.0 * T::epsilon().to_f64_lossy()));

    while state.level() < n {
        if let Some(limit) = config.max_wall_time {
            if started.elapsed() > limit {
                return Err(Error::TimedOut {
                    partial: state.partial().to_vec(),
                    fixed: state.level(),
                    n,
                });
            }
        }

        if state.remaining() == 1 {
            // A 1×1 doubly stochastic iterate is already the assignment.
            observer(&state);
            state.reduce(config)?;
            reductions += 1;
            f_prev = None;
            count = 0;
            continue;
        }

        let f_here = state.descend_step(config.proj_tol)?;
        check_descent(f_prev, f_here, descent_tol, state.level(), count)?;
        f_prev = Some(f_here);
        gradient_steps += 1;
        count += 1;

        if count >= state.niter() {
            // Close out the level: check the post-step value too, then fix.
            let f_end = state.value();
            check_descent(f_prev, f_end, descent_tol, state.level(), count)?;
            observer(&state);
            state.reduce(config)?;
            reductions += 1;
            f_prev = None;
            count = 0;
        }
    }

    debug_assert_eq!(reductions, n);
    let permutation: Vec<usize> = state
        .partial()
        .iter()
        .map(|o| o.expect("loop exits only with every row fixed"))
        .collect();
    let objective = evaluate_permutation(instance, &permutation)?;
    log::info!(
        "solved {}: n={n}, objective={objective}, {gradient_steps} gradient steps",
        instance.name()
    );
    Ok(AssignmentResult {
        instance: instance.name().to_string(),
        n,
        permutation,
        objective,
        lower_bound: None,
        reductions,
        gradient_steps,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        config_echo: config.clone(),
    })
}

/// Monotone-descent invariant: within one level, the relaxed objective may
/// not rise by more than `tol·(1 + |previous|)` between successive steps.
fn check_descent<T: Scalar>(
    prev: Option<T>,
    now: T,
    tol: T,
    level: usize,
    step: usize,
) -> Result<(), Error<T>> {
    if !now.is_finite() {
        return Err(Error::NumericError(format!(
            "objective became non-finite at level {level}, step {step}"
        )));
    }
    if let Some(p) = prev {
        if now > p + tol * (T::one() + p.abs()) {
            return Err(Error::NumericError(format!(
                "descent violated at level {level}, step {step}: {p} -> {now}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force;
    use crate::projection::is_doubly_stochastic;
    use crate::relaxation::build_relaxed;
    use ndarray::array;

    fn inst2() -> QapInstance<f64> {
        QapInstance::new(
            "s2",
            array![[0.0, 3.0], [3.0, 0.0]],
            array![[0.0, 1.0], [1.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn trigger_count_matches_hand_values() {
        // Ratio (3+1)/(3−1) = 2: ln 2 / (2 ln 2) = 0.5, ceil → 1.
        assert_eq!(trigger_count(1.0, 3.0, 0.5, 100).unwrap(), 1);
        // Nearly flat relative gap: raw count 173287 clamps to η.
        assert_eq!(trigger_count(1.0, 1e6, 0.5, 100).unwrap(), 100);
        // Collapsed spectrum: one exact step suffices.
        assert_eq!(trigger_count(7.0, 7.0, 0.5, 100).unwrap(), 1);
        // ε = 1 asks for no contraction; still at least one step.
        assert_eq!(trigger_count(1.0, 3.0, 1.0, 100).unwrap(), 1);
        // Big spread but tiny η clamps down.
        assert_eq!(trigger_count(1.0, 1e6, 0.5, 3).unwrap(), 3);
    }

    #[test]
    fn trigger_count_rejects_bad_inputs() {
        assert!(matches!(
            trigger_count(0.0, 3.0, 0.5, 100),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(matches!(
            trigger_count(-1.0, 3.0, 0.5, 100),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(matches!(
            trigger_count(3.0, 1.0, 0.5, 100),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(matches!(
            trigger_count(1.0, 3.0, 0.0, 100),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            trigger_count(1.0, 3.0, 1.5, 100),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            trigger_count(1.0, 3.0, 0.5, 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn step_size_on_identity_hessian_is_half() {
        // A = B = I₂ gives W_sym = I with μ_min = 1; σ = 2 leaves shift 0,
        // so H = 2I and α = gᵀg / (2gᵀg) = ½ for any g.
        let inst = QapInstance::new("eye", Array2::<f64>::eye(2), Array2::eye(2)).unwrap();
        let rp = build_relaxed(&inst, 2.0).unwrap();
        let g = Array1::from_vec(vec![0.3, -1.0, 2.0, 0.7]);
        let alpha = step_size(&rp, &g).unwrap();
        assert!((alpha - 0.5).abs() < 1e-12);
    }

    #[test]
    fn step_size_inverts_eigenvalue_on_eigenvector() {
        // B = I₂, A = diag(1, 2): W = diag(1,2,1,2), shift 0 under σ = 2,
        // H = diag(2,4,2,4). Along e₂ (eigenvalue 4) the exact step is ¼.
        let a = array![[1.0, 0.0], [0.0, 2.0]];
        let inst = QapInstance::new("diag", a, Array2::eye(2)).unwrap();
        let rp = build_relaxed(&inst, 2.0).unwrap();
        let mut g = Array1::zeros(4);
        g[1] = 1.0;
        let alpha: f64 = step_size(&rp, &g).unwrap();
        assert!((alpha - 0.25).abs() < 1e-12, "alpha = {alpha}");
    }

    #[test]
    fn reduce_fixes_the_largest_entry_and_shrinks_everything() {
        let inst = inst2();
        let config = SolverConfig::default();
        let mut state = ReductionState::new(&inst, &config).unwrap();
        state.x = array![[0.1, 0.9], [0.9, 0.1]];
        state.reduce(&config).unwrap();
        // First strict maximum in row-major order is (0, 1).
        assert_eq!(state.partial(), &[Some(1), None]);
        assert_eq!(state.level(), 1);
        assert_eq!(state.remaining(), 1);
        assert_eq!(state.flow().dim(), (1, 1));
        assert_eq!(state.distance().dim(), (1, 1));
        assert_eq!(state.iterate().dim(), (1, 1));
        assert!((state.iterate()[[0, 0]] - 1.0).abs() < 1e-12);
        assert_eq!(state.active_rows(), &[1]);
        assert_eq!(state.active_cols(), &[0]);

        state.reduce(&config).unwrap();
        assert_eq!(state.partial(), &[Some(1), Some(0)]);
        assert_eq!(state.remaining(), 0);
    }

    #[test]
    fn reduce_breaks_ties_toward_smallest_indices() {
        let inst = inst2();
        let config = SolverConfig::default();
        let mut state = ReductionState::new(&inst, &config).unwrap();
        // Barycenter start: all entries tie at ½ → fix (0, 0).
        state.reduce(&config).unwrap();
        assert_eq!(state.partial(), &[Some(0), None]);
    }

    #[test]
    fn fold_cross_terms_accumulates_interaction_with_fixed_pair() {
        let a = array![[0.0, 2.0, 5.0], [2.0, 0.0, 1.0], [5.0, 1.0, 0.0]];
        let b = array![[0.0, 3.0, 1.0], [3.0, 0.0, 4.0], [1.0, 4.0, 0.0]];
        let inst = QapInstance::new("t3", a.clone(), b.clone(), ).unwrap();
        let mut config = SolverConfig::default();
        config.fold_cross_terms = true;
        let mut state = ReductionState::new(&inst, &config).unwrap();
        // Force the fix at live (r, c) = (1, 2).
        state.x = array![[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        state.reduce(&config).unwrap();
        assert_eq!(state.partial(), &[None, Some(2), None]);
        // Surviving rows {0, 2} × cols {0, 1}; expected delta for original
        // pair (i, j): A[i,1]·B[j,2] + A[1,i]·B[2,j].
        for (live_i, orig_i) in [(0usize, 0usize), (1, 2)] {
            for (live_j, orig_j) in [(0usize, 0usize), (1, 1)] {
                let expected: f64 = a[[orig_i, 1]] * b[[orig_j, 2]] + a[[1, orig_i]] * b[[2, orig_j]];
                assert!(
                    (state.linear()[[live_i, live_j]] - expected).abs() < 1e-12,
                    "({live_i},{live_j}): {} vs {expected}",
                    state.linear()[[live_i, live_j]]
                );
            }
        }
    }

    #[test]
    fn solve_handles_n1() {
        let inst = QapInstance::new("one", array![[5.0]], array![[7.0]]).unwrap();
        let res = solve(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(res.permutation, vec![0]);
        assert_eq!(res.objective, 35.0);
        assert_eq!(res.reductions, 1);
        assert_eq!(res.gradient_steps, 0);
    }

    #[test]
    fn solve_returns_a_valid_permutation_within_oracle_band() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let config = SolverConfig::default();
        for n in 2..=5usize {
            let a = Array2::from_shape_fn((n, n), |_| rng.gen_range(0.0..10.0f64).round());
            let b = Array2::from_shape_fn((n, n), |_| rng.gen_range(0.0..10.0f64).round());
            let inst = QapInstance::new("rand", a, b).unwrap();
            let res = solve(&inst, &config).unwrap();
            let oracle = brute_force(&inst).unwrap();
            let worst = {
                use itertools::Itertools;
                (0..n)
                    .permutations(n)
                    .map(|p| evaluate_permutation(&inst, &p).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            assert!(
                res.objective >= oracle.optimum - 1e-9 && res.objective <= worst + 1e-9,
                "n={n}: objective {} outside [{}, {worst}]",
                res.objective,
                oracle.optimum
            );
            let check = evaluate_permutation(&inst, &res.permutation).unwrap();
            assert_eq!(check, res.objective);
        }
    }

    #[test]
    fn observer_sees_every_level_with_feasible_iterates() {
        let a = array![[0.0, 2.0, 7.0], [2.0, 0.0, 4.0], [7.0, 4.0, 0.0]];
        let b = array![[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]];
        let inst = QapInstance::new("t3", a, b).unwrap();
        let mut levels = Vec::new();
        let res = solve_observed(&inst, &SolverConfig::default(), |state| {
            levels.push(state.level());
            assert!(is_doubly_stochastic(state.iterate(), 1e-6));
            assert_eq!(state.remaining(), 3 - state.level());
        })
        .unwrap();
        assert_eq!(levels, vec![0, 1, 2]);
        assert_eq!(res.reductions, 3);
    }

    #[test]
    fn gradient_step_total_is_sum_of_trigger_counts() {
        let a = array![[0.0, 2.0, 7.0, 1.0], [2.0, 0.0, 4.0, 6.0], [7.0, 4.0, 0.0, 3.0], [1.0, 6.0, 3.0, 0.0]];
        let b = array![[0.0, 1.0, 3.0, 2.0], [1.0, 0.0, 2.0, 5.0], [3.0, 2.0, 0.0, 1.0], [2.0, 5.0, 1.0, 0.0]];
        let inst = QapInstance::new("t4", a, b).unwrap();
        let mut config = SolverConfig::default();
        config.initial_niter = 7;
        let mut schedule = Vec::new();
        let res = solve_observed(&inst, &config, |state| {
            if state.remaining() > 1 {
                schedule.push(state.niter());
            }
        })
        .unwrap();
        assert_eq!(schedule.len(), 3); // levels 0..=2 take steps; level 3 is degenerate
        assert_eq!(res.gradient_steps, schedule.iter().sum::<usize>());
        assert_eq!(schedule[0], 7);
    }

    #[test]
    fn timeout_carries_partial_assignment() {
        let n = 6;
        let a = Array2::from_shape_fn((n, n), |(i, j)| ((i * 3 + j * 5) % 11) as f64);
        let b = Array2::from_shape_fn((n, n), |(i, j)| ((i * 7 + j * 2) % 13) as f64);
        let inst = QapInstance::new("slow", a, b).unwrap();
        let mut config = SolverConfig::default();
        config.max_wall_time = Some(Duration::ZERO);
        match solve(&inst, &config) {
            Err(Error::TimedOut { partial, fixed, n: got_n }) => {
                assert_eq!(got_n, n);
                assert_eq!(partial.len(), n);
                assert_eq!(fixed, partial.iter().filter(|o| o.is_some()).count());
            }
            other => panic!("expected TimedOut, got {other:?}"),
        }
    }

    #[test]
    fn config_validation_rejects_out_of_range_fields() {
        let inst = inst2();
        for bad in [
            SolverConfig { sigma: 0.0, ..SolverConfig::default() },
            SolverConfig { sigma: f64::NAN, ..SolverConfig::default() },
            SolverConfig { epsilon: 0.0, ..SolverConfig::default() },
            SolverConfig { epsilon: 1.5, ..SolverConfig::default() },
            SolverConfig { eta: 0, ..SolverConfig::default() },
            SolverConfig { initial_niter: 0, ..SolverConfig::default() },
            SolverConfig { proj_tol: -1.0, ..SolverConfig::default() },
        ] {
            assert!(
                matches!(solve(&inst, &bad), Err(Error::InvalidConfig(_))),
                "accepted bad config {bad:?}"
            );
        }
    }

    #[test]
    fn config_serializes_with_readable_fields() {
        let config = SolverConfig::default();
        let json = serde_json::to_value(&config).unwrap();
        assert_eq!(json["sigma"], 1e6);
        assert_eq!(json["epsilon"], 0.5);
        assert_eq!(json["eta"], 100);
        assert_eq!(json["spectral_refresh"], "reuse");
        assert_eq!(json["spectral_strategy"], "auto");
        assert!(json["max_wall_time_s"].is_null());

        let timed = SolverConfig {
            max_wall_time: Some(Duration::from_millis(2500)),
            ..SolverConfig::default()
        };
        let json = serde_json::to_value(&timed).unwrap();
        assert_eq!(json["max_wall_time_s"], 2.5);
    }

    #[test]
    fn recompute_refresh_tightens_trigger_counts() {
        // Asymmetric sizes where bounds genuinely shrink after reduction.
        let n = 5;
        let a = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { (i + 2 * j) as f64 });
        let b = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { (3 * i + j) as f64 });
        let inst = QapInstance::new("t5", a, b).unwrap();
        for refresh in [SpectralRefresh::Reuse, SpectralRefresh::Recompute] {
            let config = SolverConfig {
                spectral_refresh: refresh,
                ..SolverConfig::default()
            };
            let res = solve(&inst, &config).unwrap();
            assert_eq!(res.reductions, n);
            crate::instance::validate_permutation::<f64>(&res.permutation, n).unwrap();
        }
    }

    #[test]
    fn solve_works_in_f32() {
        let a = array![[0.0f32, 3.0], [3.0, 0.0]];
        let b = array![[0.0f32, 1.0], [1.0, 0.0]];
        let inst = QapInstance::<f32>::new("s2f", a, b).unwrap();
        let res = solve(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(res.permutation.len(), 2);
        assert!(res.objective == 0.0 || res.objective == 6.0);
    }
}
