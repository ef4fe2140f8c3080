use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::generator::{derive_seed, generate, ProcessConfig};
use crate::solver::{solve, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchConfig {
    pub n: usize,
    pub k: usize,
    pub ratio: u64,
    pub planted: bool,
    pub repetitions: usize,
    pub seed: u64,
    pub conflict_budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub successes: usize,
    pub generation_failures: usize,
    pub mean_gen_ms: f64,
    pub mean_solve_ms: f64,
    pub max_solve_ms: f64,
}

/// Times generation and solving over derived seeds.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    let m = config.ratio * config.n as u64;
    let (mut gen_ms, mut solve_ms, mut max_solve) = (Vec::new(), Vec::new(), 0.0f64);
    let (mut successes, mut failures) = (0, 0);
    for r in 0..config.repetitions as u64 {
        let seed = derive_seed(config.seed, &[r]);
        let mut process = if config.planted {
            ProcessConfig::planted(config.n, config.k, m, seed)
        } else {
            ProcessConfig::perm(config.n, config.k, m, seed)
        };
        process.conflict_budget = config.conflict_budget;
        let start = Instant::now();
        let generated = generate(&process);
        gen_ms.push(start.elapsed().as_secs_f64() * 1e3);
        let (formula, _) = match generated {
            Ok(x) => x,
            Err(crate::Error::Refused(_)) => {
                failures += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let start = Instant::now();
        let outcome = solve(&formula, &SolverConfig::for_formula(&formula));
        let ms = start.elapsed().as_secs_f64() * 1e3;
        max_solve = max_solve.max(ms);
        solve_ms.push(ms);
        successes += outcome.is_success() as usize;
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    Ok(BenchReport {
        config: config.clone(),
        successes,
        generation_failures: failures,
        mean_gen_ms: mean(&gen_ms),
        mean_solve_ms: mean(&solve_ms),
        max_solve_ms: max_solve,
    })
}
