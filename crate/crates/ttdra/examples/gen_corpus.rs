//! Regenerates the synthetic benchmark corpus under `data/corpus/`.
//!
//! ```text
//! cargo run -p ttdra --example gen_corpus -- [OUT_DIR]
//! ```
//!
//! Every file is deterministic: each instance seeds its RNG from a hash of
//! its own name, so reruns are byte-identical. Three families:
//!
//! * `symNNa` — symmetric integer flow/distance matrices, zero diagonal;
//! * `asyNNa` — asymmetric integer matrices, zero diagonal;
//! * `griNNa` — Manhattan distances on a small grid with random symmetric
//!   flows (the classical facility-layout texture).
//!
//! Each `.dat` gets a companion `.sln`. For n ≤ 10 the `.sln` holds the
//! exact optimum (exhaustive enumeration). Beyond that it holds the best
//! solution found by multi-start pairwise-exchange local search and by the
//! solver itself — a best-known value, not a certificate, which is the same
//! epistemic status the classical benchmark library's solution files have.

use std::env;
use std::fs;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use ttdra::{
    brute_force, evaluate_permutation, grid_instance, random_instance, random_permutation, solve,
    write_dat, write_sln, QapInstance, SolverConfig, SyntheticOptions, MAX_BRUTE_FORCE_N,
};

fn seed_for(name: &str) -> u64 {
    // FNV-1a; stability matters more than hash quality here.
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// First-improvement pairwise-exchange descent, in place. Returns the cost.
fn local_search(inst: &QapInstance, perm: &mut [usize]) -> f64 {
    let n = inst.n();
    let mut best = evaluate_permutation(inst, perm).expect("valid permutation");
    loop {
        let mut improved = false;
        for i in 0..n.saturating_sub(1) {
            for j in i + 1..n {
                perm.swap(i, j);
                let cost = evaluate_permutation(inst, perm).expect("valid permutation");
                if cost < best {
                    best = cost;
                    improved = true;
                } else {
                    perm.swap(i, j);
                }
            }
        }
        if !improved {
            return best;
        }
    }
}

/// Best solution seen across `restarts` local searches and one solver run.
fn best_known(inst: &QapInstance, rng: &mut impl Rng, restarts: usize) -> (f64, Vec<usize>) {
    let n = inst.n();
    let mut best_perm = random_permutation(rng, n);
    let mut best = local_search(inst, &mut best_perm);
    for _ in 1..restarts {
        let mut perm = random_permutation(rng, n);
        let cost = local_search(inst, &mut perm);
        if cost < best {
            best = cost;
            best_perm = perm;
        }
    }
    if let Ok(result) = solve(inst, &SolverConfig::default()) {
        if result.objective < best {
            best = result.objective;
            best_perm = result.permutation;
        }
    }
    (best, best_perm)
}

fn main() {
    let out: PathBuf = env::args()
        .nth(1)
        .unwrap_or_else(|| "data/corpus".into())
        .into();
    fs::create_dir_all(&out).expect("create corpus directory");

    let mut plan: Vec<QapInstance> = Vec::new();
    for n in [4usize, 5, 6, 7, 8, 9, 10, 12, 15, 20, 25, 30, 40] {
        let name = format!("sym{n:02}a");
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(&name));
        plan.push(random_instance(&name, n, &mut rng, SyntheticOptions::default()));
    }
    for n in [4usize, 5, 6, 7, 8, 9, 10, 12, 20, 30] {
        let name = format!("asy{n:02}a");
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(&name));
        let options = SyntheticOptions {
            symmetric: false,
            ..SyntheticOptions::default()
        };
        plan.push(random_instance(&name, n, &mut rng, options));
    }
    for (rows, cols) in [(2usize, 2usize), (2, 3), (3, 3), (3, 4), (4, 4), (4, 5), (5, 5), (5, 6)] {
        let n = rows * cols;
        let name = format!("gri{n:02}a");
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(&name));
        plan.push(grid_instance(&name, rows, cols, 50, &mut rng));
    }

    for inst in &plan {
        let n = inst.n();
        fs::write(out.join(format!("{}.dat", inst.name())), write_dat(inst))
            .expect("write .dat");
        let (objective, permutation, status) = if n <= MAX_BRUTE_FORCE_N {
            let exact = brute_force(inst).expect("within brute-force range");
            (exact.optimum, exact.argmin, "exact")
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(inst.name()) ^ 0x5311);
            let (cost, perm) = best_known(inst, &mut rng, 48);
            (cost, perm, "best-found")
        };
        fs::write(
            out.join(format!("{}.sln", inst.name())),
            write_sln(n, objective, &permutation),
        )
        .expect("write .sln");
        println!("{:<8} n={:<3} {:>12}  ({status})", inst.name(), n, objective);
    }
    println!("{} instances written to {}", plan.len(), out.display());
}
