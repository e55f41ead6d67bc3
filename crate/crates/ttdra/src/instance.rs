//! Instance and solution file handling plus the result data contract.
//!
//! File formats (QAPLIB conventions):
//!
//! * `.dat` — whitespace-separated tokens: first `n`, then the n² entries of
//!   the flow matrix A in row-major order, then the n² entries of the
//!   distance matrix B. Line breaks carry no meaning.
//! * `.sln` — first `n` and the objective value, then the n entries of the
//!   permutation, 1-indexed.
//!
//! The canonical cost of a permutation π is
//!
//! ```text
//!     cost(π) = Σ_{i,j} A[i,j] · B[π(i),π(j)]  (+ optional linear term)
//! ```
//!
//! which is the orientation the `.sln` ground-truth files use. Every module
//! in this crate sticks to it.
//!
//! Permutations are 0-indexed everywhere in memory and 1-indexed in files
//! and in serialized output. QAPLIB's integer-valued objectives are held as
//! floating point; comparisons against `.sln` values round to the nearest
//! integer first.

use ndarray::{Array1, Array2};

use crate::error::Error;
use crate::scalar::Scalar;
use crate::solver::SolverConfig;

/// Hard cap on instance dimension; matrices are stored dense.
pub const MAX_N: usize = 256;

/// Problem data for one quadratic assignment instance.
///
/// The objective is `x^T (B ⊗ A) x + c^T x` over vectorized permutation
/// matrices; `linear` (c) defaults to zero, which recovers the pure
/// Koopman-Beckmann form. A zero `flow` or `distance` matrix degenerates to
/// a linear assignment problem in `linear`.
#[derive(Debug, Clone, PartialEq)]
pub struct QapInstance<T: Scalar = f64> {
    name: String,
    n: usize,
    flow: Array2<T>,
    distance: Array2<T>,
    linear: Array1<T>,
}

impl<T: Scalar> QapInstance<T> {
    pub fn new(
        name: impl Into<String>,
        flow: Array2<T>,
        distance: Array2<T>,
    ) -> Result<Self, Error<T>> {
        let n = flow.nrows();
        let linear = Array1::zeros(n * n);
        Self::with_linear(name, flow, distance, linear)
    }

    pub fn with_linear(
        name: impl Into<String>,
        flow: Array2<T>,
        distance: Array2<T>,
        linear: Array1<T>,
    ) -> Result<Self, Error<T>> {
        let name = name.into();
        let n = flow.nrows();
        if n == 0 {
            return Err(Error::MalformedInstance(format!("{name}: n must be ≥ 1")));
        }
        if n > MAX_N {
            return Err(Error::MalformedInstance(format!(
                "{name}: n = {n} exceeds the supported maximum {MAX_N}"
            )));
        }
        if flow.ncols() != n || distance.nrows() != n || distance.ncols() != n {
            return Err(Error::MalformedInstance(format!(
                "{name}: flow is {}×{}, distance is {}×{}; both must be {n}×{n}",
                flow.nrows(),
                flow.ncols(),
                distance.nrows(),
                distance.ncols()
            )));
        }
        if linear.len() != n * n {
            return Err(Error::DimensionError {
                expected: n * n,
                got: linear.len(),
            });
        }
        for &v in flow.iter().chain(distance.iter()).chain(linear.iter()) {
            if !v.is_finite() {
                return Err(Error::MalformedInstance(format!(
                    "{name}: non-finite entry {v}"
                )));
            }
        }
        Ok(Self {
            name,
            n,
            flow,
            distance,
            linear,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Flow matrix A.
    pub fn flow(&self) -> &Array2<T> {
        &self.flow
    }

    /// Distance matrix B.
    pub fn distance(&self) -> &Array2<T> {
        &self.distance
    }

    /// Linear cost term c, length n², column-major vec layout.
    pub fn linear(&self) -> &Array1<T> {
        &self.linear
    }

    /// True when both A and B are exactly symmetric. Exact comparison is
    /// intentional: integer-valued corpus data either is or is not
    /// symmetric, and the spectral fast path keyed on this must not fire on
    /// approximately-symmetric input.
    pub fn is_symmetric(&self) -> bool {
        let sym = |m: &Array2<T>| {
            for i in 0..self.n {
                for j in (i + 1)..self.n {
                    if m[[i, j]] != m[[j, i]] {
                        return false;
                    }
                }
            }
            true
        };
        sym(&self.flow) && sym(&self.distance)
    }
}

/// Ground truth from a `.sln` file.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownSolution<T: Scalar = f64> {
    pub n: usize,
    pub objective: T,
    /// 0-indexed in memory (files are 1-indexed).
    pub permutation: Vec<usize>,
}

/// Returns an error unless `perm` is a bijection on 0..n.
pub fn validate_permutation<T: Scalar>(perm: &[usize], n: usize) -> Result<(), Error<T>> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "length {} for an instance of size {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n {
            return Err(Error::InvalidPermutation(format!(
                "index {p} out of range for n = {n} (0-indexed)"
            )));
        }
        if seen[p] {
            return Err(Error::InvalidPermutation(format!("index {p} repeated")));
        }
        seen[p] = true;
    }
    Ok(())
}

fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

fn parse_usize<T: Scalar>(tok: &str, what: &str, err: fn(String) -> Error<T>) -> Result<usize, Error<T>> {
    tok.parse::<usize>()
        .map_err(|_| err(format!("{what}: expected a nonnegative integer, got {tok:?}")))
}

fn parse_scalar<T: Scalar>(tok: &str, what: &str, err: fn(String) -> Error<T>) -> Result<T, Error<T>> {
    let v = tok
        .parse::<f64>()
        .map_err(|_| err(format!("{what}: expected a number, got {tok:?}")))?;
    Ok(T::cast(v))
}

/// Parses QAPLIB `.dat` text: `n`, then A row-major, then B row-major.
pub fn parse_instance<T: Scalar>(name: &str, text: &str) -> Result<QapInstance<T>, Error<T>> {
    let mut toks = tokens(text);
    let err = Error::MalformedInstance as fn(String) -> Error<T>;
    let n = match toks.next() {
        Some(t) => parse_usize(t, "first token (n)", err)?,
        None => return Err(err(format!("{name}: empty input"))),
    };
    if n < 1 {
        return Err(err(format!("{name}: n must be ≥ 1")));
    }
    if n > MAX_N {
        return Err(err(format!(
            "{name}: n = {n} exceeds the supported maximum {MAX_N}"
        )));
    }
    let read_matrix = |which: &str, toks: &mut dyn Iterator<Item = &str>| {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let tok = toks.next().ok_or_else(|| {
                    err(format!(
                        "{name}: expected {} entries for matrix {which}, input ended early",
                        n * n
                    ))
                })?;
                m[[i, j]] = parse_scalar(tok, &format!("matrix {which} entry ({i},{j})"), err)?;
            }
        }
        Ok::<_, Error<T>>(m)
    };
    let flow = read_matrix("A", &mut toks)?;
    let distance = read_matrix("B", &mut toks)?;
    if let Some(extra) = toks.next() {
        return Err(err(format!(
            "{name}: trailing token {extra:?} after {} expected entries",
            1 + 2 * n * n
        )));
    }
    QapInstance::new(name, flow, distance)
}

/// Parses QAPLIB `.sln` text: `n`, objective, then the permutation
/// (1-indexed in the file, 0-indexed in the returned value).
pub fn parse_solution<T: Scalar>(text: &str) -> Result<KnownSolution<T>, Error<T>> {
    let mut toks = tokens(text);
    let err = Error::MalformedSolution as fn(String) -> Error<T>;
    let n = match toks.next() {
        Some(t) => parse_usize(t, "first token (n)", err)?,
        None => return Err(err("empty input".into())),
    };
    if n < 1 {
        return Err(err("n must be ≥ 1".into()));
    }
    let objective = match toks.next() {
        Some(t) => parse_scalar(t, "objective", err)?,
        None => return Err(err("missing objective".into())),
    };
    let mut permutation = Vec::with_capacity(n);
    for k in 0..n {
        let tok = toks
            .next()
            .ok_or_else(|| err(format!("expected {n} permutation entries, got {k}")))?;
        let p = parse_usize(tok, &format!("permutation entry {k}"), err)?;
        if p < 1 || p > n {
            return Err(err(format!(
                "permutation entry {p} out of range 1..={n} (file entries are 1-indexed)"
            )));
        }
        permutation.push(p - 1);
    }
    if let Some(extra) = toks.next() {
        return Err(err(format!("trailing token {extra:?}")));
    }
    validate_permutation::<T>(&permutation, n)
        .map_err(|e| err(format!("not a bijection: {e}")))?;
    Ok(KnownSolution {
        n,
        objective,
        permutation,
    })
}

/// Formats an instance in the `.dat` grammar. `parse_instance` of the output
/// reproduces the instance exactly (floats print shortest-round-trip).
pub fn write_dat<T: Scalar>(inst: &QapInstance<T>) -> String {
    let mut out = String::new();
    let n = inst.n();
    out.push_str(&format!("{n}\n\n"));
    for m in [inst.flow(), inst.distance()] {
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| fmt_scalar(m[[i, j]])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Formats a solution in the `.sln` grammar (permutation 0-indexed in,
/// 1-indexed out).
pub fn write_sln<T: Scalar>(n: usize, objective: T, permutation: &[usize]) -> String {
    let perm: Vec<String> = permutation.iter().map(|&p| (p + 1).to_string()).collect();
    format!("{n} {}\n{}\n", fmt_scalar(objective), perm.join(" "))
}

/// Shortest representation that parses back to the identical value.
fn fmt_scalar<T: Scalar>(v: T) -> String {
    let f = v.to_f64_lossy();
    if f == f.trunc() && f.abs() < 1e15 {
        format!("{}", f as i64)
    } else {
        // `{:?}` on floats is the shortest round-trip form.
        format!("{f:?}")
    }
}

/// Everything `solve` reports about one run.
///
/// `objective` is always recomputed from `permutation` via
/// `evaluate_permutation` — the solver is not trusted to account for its own
/// bookkeeping. `lower_bound`, when present, comes from a separate
/// reduction-free relaxation solve.
#[derive(Debug, Clone)]
pub struct AssignmentResult<T: Scalar = f64> {
    pub instance: String,
    pub n: usize,
    /// 0-indexed in memory; serialized 1-indexed.
    pub permutation: Vec<usize>,
    pub objective: T,
    pub lower_bound: Option<T>,
    /// Number of fix-and-delete events; always equals `n`.
    pub reductions: usize,
    pub gradient_steps: usize,
    pub wall_time_ms: f64,
    pub config_echo: SolverConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Header for the CSV form of [`write_result`].
pub const RESULT_CSV_HEADER: &str =
    "instance,n,objective,lower_bound,reductions,gradient_steps,wall_time_ms,permutation,config";

/// Serializes a result. JSON field order is fixed; the permutation is
/// 1-indexed; `lower_bound` is omitted (not null) when absent. CSV output is
/// a header line plus one record matching [`RESULT_CSV_HEADER`].
pub fn write_result<T: Scalar>(result: &AssignmentResult<T>, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut map = serde_json::Map::new();
            map.insert("instance".into(), result.instance.clone().into());
            map.insert("n".into(), result.n.into());
            map.insert(
                "permutation".into(),
                result
                    .permutation
                    .iter()
                    .map(|&p| p + 1)
                    .collect::<Vec<_>>()
                    .into(),
            );
            map.insert("objective".into(), result.objective.to_f64_lossy().into());
            if let Some(lb) = result.lower_bound {
                map.insert("lower_bound".into(), lb.to_f64_lossy().into());
            }
            map.insert("reductions".into(), result.reductions.into());
            map.insert("gradient_steps".into(), result.gradient_steps.into());
            map.insert("wall_time_ms".into(), result.wall_time_ms.into());
            map.insert(
                "config".into(),
                serde_json::to_value(&result.config_echo).expect("config serializes"),
            );
            let mut s =
                serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("json");
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let perm: Vec<String> = result.permutation.iter().map(|&p| (p + 1).to_string()).collect();
            let config = serde_json::to_string(&result.config_echo).expect("config serializes");
            let record = [
                result.instance.clone(),
                result.n.to_string(),
                fmt_scalar(result.objective),
                result.lower_bound.map(fmt_scalar).unwrap_or_default(),
                result.reductions.to_string(),
                result.gradient_steps.to_string(),
                format!("{:?}", result.wall_time_ms),
                perm.join(" "),
                config,
            ];
            format!("{RESULT_CSV_HEADER}\n{}\n", csv_record(&record))
        }
    }
}

/// Minimal CSV quoting: fields containing commas, quotes or newlines are
/// wrapped in double quotes with embedded quotes doubled.
pub(crate) fn csv_record(fields: &[String]) -> String {
    let escaped: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    escaped.join(",")
}

/// Integer-valued corpus objectives are compared after rounding — `.sln`
/// agreement means exact integer equality, not a float tolerance.
pub fn same_integer_objective(a: f64, b: f64) -> bool {
    a.round() == b.round()
}
