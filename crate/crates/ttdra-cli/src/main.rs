//! `ttdra` — command-line front end for the assignment solver.
//!
//! Subcommands: `solve` one instance, `bench` a corpus directory,
//! `project` a raw matrix onto the doubly stochastic polytope, and
//! `oracle` an instance by exhaustive enumeration.
//!
//! Exit codes: 0 success, 2 malformed input (bad files, bad flags, empty
//! corpus, oracle size caps), 3 runtime failure (solver error or timeout).
//! Machine-readable output goes to standard output; diagnostics go to
//! standard error at a verbosity chosen by `TTDRA_LOG={error|info|debug}`.

mod bench;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use ttdra::{
    brute_force, build_relaxed_with, parse_instance, project_ds, solve, solve_relaxation_default,
    write_result, Error, OutputFormat, QapInstance, SolverConfig, SpectralStrategy,
    DEFAULT_MAX_SWEEPS, DEFAULT_PROJECTION_TOL,
};

#[derive(Parser)]
#[command(name = "ttdra", version, about = "Quadratic assignment solver and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the assignment.
    Solve(SolveArgs),
    /// Solve every instance in a directory and print benchmark records.
    Bench(bench::BenchArgs),
    /// Project a matrix onto the doubly stochastic polytope.
    Project(ProjectArgs),
    /// Exhaustively enumerate an instance (small n only).
    Oracle(OracleArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file in `.dat` format.
    instance: PathBuf,
    /// Strong convexity target σ.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Trigger accuracy ε ∈ (0, 1].
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Per-level cap η on gradient steps between reductions.
    #[arg(long)]
    eta: Option<usize>,
    /// Feasibility tolerance for the doubly stochastic projection.
    #[arg(long, allow_negative_numbers = true)]
    proj_tol: Option<f64>,
    /// Fold the fixed row/column's cross terms into the reduced linear term.
    #[arg(long)]
    fold_cross_terms: bool,
    /// Also solve the reduction-free relaxation and report its lower bound.
    #[arg(long)]
    bound: bool,
    /// Spectral bound engine (defaults to an automatic choice).
    #[arg(long, value_enum)]
    spectral: Option<SpectralArg>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputArg::Json)]
    output: OutputArg,
    /// Wall-clock budget in seconds; exceeding it aborts the solve.
    #[arg(long, value_name = "SECS")]
    time_limit: Option<f64>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Text file holding `n` followed by n² row-major entries.
    matrix: PathBuf,
    /// Feasibility tolerance.
    #[arg(long, default_value_t = DEFAULT_PROJECTION_TOL)]
    tol: f64,
}

#[derive(Args)]
struct OracleArgs {
    /// Instance file in `.dat` format.
    instance: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectralArg {
    Dense,
    Iterative,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum OutputArg {
    Json,
    Csv,
}

/// A failure with its exit code: 2 for malformed input, 3 for runtime.
pub enum Failure {
    Input(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Runtime(m) => m,
        }
    }
}

/// Classifies library errors: bad data or configuration is the caller's
/// fault (exit 2); anything the solver hit mid-flight is a runtime
/// failure (exit 3).
pub fn classify(err: Error) -> Failure {
    match err {
        Error::MalformedInstance(_)
        | Error::MalformedSolution(_)
        | Error::InvalidPermutation(_)
        | Error::DimensionError { .. }
        | Error::StrategyTooLarge { .. }
        | Error::InvalidConfig(_)
        | Error::TooLargeForOracle { .. } => Failure::Input(err.to_string()),
        Error::SpectralFailure(_)
        | Error::ConvexityViolation { .. }
        | Error::InvalidSpectrum(_)
        | Error::ProjectionNotConverged { .. }
        | Error::NumericError(_)
        | Error::TimedOut { .. } => Failure::Runtime(err.to_string()),
    }
}

pub fn read_to_string(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn load_instance(path: &Path) -> Result<QapInstance, Failure> {
    let text = read_to_string(path)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("instance")
        .to_owned();
    parse_instance(&name, &text).map_err(classify)
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TTDRA_LOG", "error"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => bench::cmd_bench(args),
        Command::Project(args) => cmd_project(args),
        Command::Oracle(args) => cmd_oracle(args),
    };
    match outcome {
        Ok(()) => {}
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            std::process::exit(failure.code());
        }
    }
}

fn solver_config(args: &SolveArgs) -> SolverConfig {
    let mut config = SolverConfig::default();
    if let Some(sigma) = args.sigma {
        config.sigma = sigma;
    }
    if let Some(epsilon) = args.epsilon {
        config.epsilon = epsilon;
    }
    if let Some(eta) = args.eta {
        config.eta = eta;
        config.initial_niter = eta;
    }
    if let Some(tol) = args.proj_tol {
        config.proj_tol = tol;
    }
    config.fold_cross_terms = args.fold_cross_terms;
    config.spectral_strategy = match args.spectral {
        None => SpectralStrategy::Auto,
        Some(SpectralArg::Dense) => SpectralStrategy::Dense,
        Some(SpectralArg::Iterative) => SpectralStrategy::Iterative,
    };
    config.max_wall_time = args.time_limit.map(Duration::from_secs_f64);
    config
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let instance = load_instance(&args.instance)?;
    let config = solver_config(&args);
    log::info!("solving {} (n = {})", instance.name(), instance.n());
    let mut result = solve(&instance, &config).map_err(classify)?;
    if args.bound {
        let problem = build_relaxed_with(&instance, config.sigma, config.spectral_strategy)
            .map_err(classify)?;
        let relaxed = solve_relaxation_default(&problem).map_err(classify)?;
        if !relaxed.converged {
            log::info!("relaxation hit its iteration cap; bound is best-effort");
        }
        result.lower_bound = Some(relaxed.bound);
    }
    let format = match args.output {
        OutputArg::Json => OutputFormat::Json,
        OutputArg::Csv => OutputFormat::Csv,
    };
    print!("{}", write_result(&result, format));
    Ok(())
}

fn cmd_project(args: ProjectArgs) -> Result<(), Failure> {
    let text = read_to_string(&args.matrix)?;
    let x = parse_matrix(&args.matrix, &text)?;
    let projected = project_ds(&x, args.tol, DEFAULT_MAX_SWEEPS).map_err(classify)?;
    let rows: Vec<Vec<f64>> = projected
        .matrix()
        .rows()
        .into_iter()
        .map(|r| r.to_vec())
        .collect();
    let out = serde_json::json!({
        "n": x.nrows(),
        "matrix": rows,
        "sweeps": projected.sweeps(),
        "tol": args.tol,
    });
    println!("{out:#}");
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Failure> {
    let instance = load_instance(&args.instance)?;
    let result = brute_force(&instance).map_err(classify)?;
    let argmin: Vec<usize> = result.argmin.iter().map(|&p| p + 1).collect();
    let out = serde_json::json!({
        "instance": instance.name(),
        "n": instance.n(),
        "optimum": result.optimum,
        "argmin": argmin,
        "enumerated": result.enumerated,
    });
    println!("{out:#}");
    Ok(())
}

/// Parses `n` followed by n² row-major entries, all whitespace-separated.
fn parse_matrix(path: &Path, text: &str) -> Result<Array2<f64>, Failure> {
    let bad = |msg: String| Failure::Input(format!("{}: {msg}", path.display()));
    let mut toks = text.split_whitespace();
    let n: usize = toks
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .parse()
        .map_err(|_| bad("first token must be the matrix size".into()))?;
    if n == 0 {
        return Err(bad("matrix size must be ≥ 1".into()));
    }
    let mut entries = Vec::with_capacity(n * n);
    for k in 0..n * n {
        let tok = toks
            .next()
            .ok_or_else(|| bad(format!("expected {} entries, found {k}", n * n)))?;
        let v: f64 = tok
            .parse()
            .map_err(|_| bad(format!("entry {k}: not a number: {tok:?}")))?;
        if !v.is_finite() {
            return Err(bad(format!("entry {k} is not finite")));
        }
        entries.push(v);
    }
    if let Some(extra) = toks.next() {
        return Err(bad(format!("trailing token {extra:?}")));
    }
    Ok(Array2::from_shape_vec((n, n), entries).expect("length checked"))
}
