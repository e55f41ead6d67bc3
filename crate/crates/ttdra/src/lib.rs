//! Quadratic assignment by time-triggered dimension reduction.
//!
//! A quadratic assignment instance asks for the permutation π of `0..n`
//! minimizing
//!
//! ```text
//! Σᵢⱼ A[i,j] · B[π(i),π(j)]  ( + Σᵢ c[vec(i,π(i))] )
//! ```
//!
//! for a flow matrix A, a distance matrix B, and an optional linear term c.
//! This crate solves it by a continuous heuristic with an exactness
//! certificate on one side:
//!
//! 1. vectorize to `f(x) = xᵀWx + cᵀx` with `W = B ⊗ A` ([`quadratic`]);
//! 2. build a σ-strongly-convex relaxation `f̃` that agrees with `f` on
//!    permutation matrices and under-estimates it elsewhere on the doubly
//!    stochastic polytope ([`relaxation`]);
//! 3. run projected steepest descent with exact line search ([`projection`]
//!    supplies the feasibility projection), and on a spectral trigger
//!    schedule round the largest iterate entry into the assignment and
//!    shrink the problem by one row and column ([`solver`]).
//!
//! The [`oracle`] module has deliberately naive reference implementations
//! (full enumeration, materialized operators, KKT-checked projections) for
//! validating everything above on small inputs; [`synthetic`] generates
//! reproducible benchmark instances; [`instance`] reads and writes the
//! whitespace-token instance/solution formats used by the classical
//! benchmark collections.
//!
//! # Conventions
//!
//! * Matrices are vectorized **column-major**: entry (i, j) lands at
//!   position `j·n + i` (see [`vec_index`]), which is what makes
//!   `(B ⊗ A)·vec(X) = vec(A X Bᵀ)` hold.
//! * Permutations are 0-indexed arrays `perm[i] = j` ("row i assigned to
//!   column j") in memory; the file formats are 1-indexed.
//! * Everything numeric is generic over a [`Scalar`] (`f32` or `f64`)
//!   with `f64` as the default type parameter, so `ttdra::QapInstance`
//!   *is* the concrete double-precision type and
//!   `ttdra::QapInstance<f32>` opts into single precision. Spectral
//!   bounds are always computed in `f64` internally.

pub mod error;
pub mod instance;
pub mod oracle;
pub mod projection;
pub mod quadratic;
pub mod relaxation;
mod scalar;
pub mod solver;
mod spectral;
pub mod synthetic;

pub use error::Error;
pub use instance::{
    parse_instance, parse_solution, same_integer_objective, validate_permutation, write_dat,
    write_result, write_sln, AssignmentResult, KnownSolution, OutputFormat, QapInstance, MAX_N,
    RESULT_CSV_HEADER,
};
pub use oracle::{
    brute_force, materialize_w, qp_project_oracle, OracleResult, MAX_BRUTE_FORCE_N,
    MAX_MATERIALIZE_N, MAX_QP_ORACLE_N,
};
pub use projection::{
    affine_project, ds_violation, is_doubly_stochastic, nonneg_project, project_ds,
    project_ds_default, AffineOperator, DoublyStochasticMatrix, DEFAULT_MAX_SWEEPS,
    DEFAULT_PROJECTION_TOL,
};
pub use quadratic::{
    apply_w, apply_w_sym, evaluate_permutation, mat_to_vec, objective_vec, permutation_matrix,
    vec_index, vec_to_mat,
};
pub use relaxation::{
    build_relaxed, build_relaxed_with, relaxed_gradient, relaxed_objective, solve_relaxation,
    solve_relaxation_default, spectral_bounds, RelaxationSolution, RelaxedProblem,
    SpectralStrategy, CERTIFY_TOL, DENSE_SPECTRAL_MAX_N,
};
pub use scalar::Scalar;
pub use solver::{
    solve, solve_observed, step_size, trigger_count, ReductionState, SolverConfig,
    SpectralRefresh, DEFAULT_EPSILON, DEFAULT_ETA, DEFAULT_SIGMA,
};
pub use synthetic::{grid_instance, random_instance, random_permutation, SyntheticOptions};
