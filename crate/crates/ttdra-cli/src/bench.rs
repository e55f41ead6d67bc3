//! The `bench` subcommand: batch-solve a directory of `.dat` instances,
//! pair them with `.sln` best-known values when present, and emit one
//! record per instance for plotting.
//!
//! Instances run sequentially in name order — determinism is worth more
//! here than wall-clock parallelism, and each solve is single-threaded
//! anyway. Everything except the timing fields is reproducible from
//! `--seed`, so two runs differ only in `wall_time_ms`.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use ttdra::{
    evaluate_permutation, parse_solution, random_permutation, same_integer_objective, solve,
    KnownSolution, QapInstance, SolverConfig,
};

use crate::{classify, load_instance, read_to_string, Failure, OutputArg};

/// Sample count behind `random_baseline`: the mean cost of this many
/// seeded random permutations is the fairness yardstick each solve is
/// compared against.
pub const RANDOM_BASELINE_SAMPLES: usize = 100;

/// Version tag emitted as the first CSV line, ahead of the header.
pub const CSV_VERSION_COMMENT: &str = "# ttdra-bench v1";

const CSV_HEADER: &str =
    "instance,n,objective,best_known,gap_percent,wall_time_ms,gradient_steps,random_baseline,permutation";

#[derive(Args)]
pub struct BenchArgs {
    /// Directory holding `*.dat` instance files.
    dir: PathBuf,
    /// Directory holding `*.sln` files (defaults to the instance directory).
    #[arg(long)]
    sln_dir: Option<PathBuf>,
    /// Solves per instance; the median wall time is reported.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Seed for the random-permutation baseline.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip instances larger than this.
    #[arg(long)]
    max_n: Option<usize>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputArg::Csv)]
    output: OutputArg,
}

#[derive(Serialize)]
struct BenchRecord {
    instance: String,
    n: usize,
    objective: f64,
    best_known: Option<f64>,
    /// `100·(objective − best_known)/best_known`; present iff `best_known` is.
    gap_percent: Option<f64>,
    wall_time_ms: f64,
    gradient_steps: usize,
    random_baseline: f64,
    /// 1-indexed, like every on-disk permutation.
    permutation: Vec<usize>,
}

pub fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    if args.repeat == 0 {
        return Err(Failure::Input("--repeat must be ≥ 1".into()));
    }
    let entries = std::fs::read_dir(&args.dir)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", args.dir.display())))?;
    let mut dat_paths: Vec<PathBuf> = entries
        .filter_map(|e| {
            let path = e.ok()?.path();
            (path.extension().is_some_and(|x| x == "dat")).then_some(path)
        })
        .collect();
    dat_paths.sort();
    if dat_paths.is_empty() {
        return Err(Failure::Input(format!(
            "no .dat files in {}",
            args.dir.display()
        )));
    }

    let sln_dir = args.sln_dir.as_ref().unwrap_or(&args.dir);
    let mut records = Vec::new();
    for path in &dat_paths {
        let instance = load_instance(path)?;
        if args.max_n.is_some_and(|cap| instance.n() > cap) {
            log::info!("skipping {} (n = {} over --max-n)", instance.name(), instance.n());
            continue;
        }
        let sln_path = sln_dir.join(format!("{}.sln", instance.name()));
        let best_known = if sln_path.is_file() {
            Some(load_solution(&instance, &sln_path)?)
        } else {
            None
        };
        records.push(run_one(&instance, best_known, &args)?);
    }
    if records.is_empty() {
        return Err(Failure::Input(format!(
            "--max-n {} filtered out every instance",
            args.max_n.unwrap_or(0)
        )));
    }
    records.sort_by(|a, b| a.instance.cmp(&b.instance));

    match args.output {
        OutputArg::Csv => print!("{}", to_csv(&records)),
        OutputArg::Json => println!(
            "{}",
            serde_json::to_string_pretty(&records).expect("records serialize")
        ),
    }
    Ok(())
}

/// Reads a `.sln`, checks it actually belongs to this instance (size match,
/// and its permutation reproduces its objective), and returns the objective.
fn load_solution(instance: &QapInstance, path: &std::path::Path) -> Result<f64, Failure> {
    let text = read_to_string(path)?;
    let sln: KnownSolution = parse_solution(&text).map_err(classify)?;
    if sln.n != instance.n() {
        return Err(Failure::Input(format!(
            "{}: solution is for n = {}, instance has n = {}",
            path.display(),
            sln.n,
            instance.n()
        )));
    }
    let reproduced = evaluate_permutation(instance, &sln.permutation).map_err(classify)?;
    if !same_integer_objective(reproduced, sln.objective) {
        return Err(Failure::Input(format!(
            "{}: recorded objective {} but its permutation evaluates to {reproduced}",
            path.display(),
            sln.objective
        )));
    }
    Ok(sln.objective)
}

fn run_one(
    instance: &QapInstance,
    best_known: Option<f64>,
    args: &BenchArgs,
) -> Result<BenchRecord, Failure> {
    let config = SolverConfig::default();
    let mut times = Vec::with_capacity(args.repeat);
    let mut result = None;
    for _ in 0..args.repeat {
        let run = solve(instance, &config).map_err(classify)?;
        times.push(run.wall_time_ms);
        result = Some(run);
    }
    let result = result.expect("repeat ≥ 1");
    log::info!(
        "{}: objective {} in {:.2} ms",
        instance.name(),
        result.objective,
        median(&mut times)
    );
    Ok(BenchRecord {
        instance: instance.name().to_owned(),
        n: instance.n(),
        objective: result.objective,
        best_known,
        gap_percent: best_known.map(|bk| 100.0 * (result.objective - bk) / bk),
        wall_time_ms: median(&mut times),
        gradient_steps: result.gradient_steps,
        random_baseline: random_baseline(instance, args.seed),
        permutation: result.permutation.iter().map(|&p| p + 1).collect(),
    })
}

fn median(times: &mut [f64]) -> f64 {
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    }
}

/// Mean cost of [`RANDOM_BASELINE_SAMPLES`] random permutations, from an
/// RNG seeded by `--seed` and the instance name (so records don't depend
/// on directory iteration order).
fn random_baseline(instance: &QapInstance, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(instance.name()));
    let mut total = 0.0;
    for _ in 0..RANDOM_BASELINE_SAMPLES {
        let perm = random_permutation(&mut rng, instance.n());
        total += evaluate_permutation(instance, &perm).expect("generated permutation is valid");
    }
    total / RANDOM_BASELINE_SAMPLES as f64
}

fn fnv1a(name: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = format!("{CSV_VERSION_COMMENT}\n{CSV_HEADER}\n");
    for r in records {
        let perm: Vec<String> = r.permutation.iter().map(usize::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},\"{}\"",
            r.instance,
            r.n,
            r.objective,
            r.best_known.map(fmt_opt).unwrap_or_default(),
            r.gap_percent.map(fmt_opt).unwrap_or_default(),
            r.wall_time_ms,
            r.gradient_steps,
            r.random_baseline,
            perm.join(" "),
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn fmt_opt(v: f64) -> String {
    format!("{v}")
}
