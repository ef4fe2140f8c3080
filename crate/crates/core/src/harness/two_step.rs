use serde::Serialize;

use super::stats::{chi_square_two_sample, ks_uniform, ChiSquareResult, KsResult};
use crate::error::{Error, Result};
use crate::formula::{ClauseUniverse, Formula};
use crate::generator::{derive_seed, generate_two_step, generate_unrestricted, splitmix64, ProcessConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoStepTestConfig {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub p1: f64,
    /// Second-round probability; derived from `p` and `p1` when absent.
    pub p2: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Buckets of the hashed formula-identity histogram.
    pub hash_buckets: usize,
}

impl TwoStepTestConfig {
    /// `n = 4`, `k = 3`, `p = 0.3` split as `p1 = 0.1`, `10^5` samples.
    pub fn standard(seed: u64) -> Self {
        TwoStepTestConfig {
            n: 4,
            k: 3,
            p: 0.3,
            p1: 0.1,
            p2: None,
            samples: 100_000,
            seed,
            hash_buckets: 64,
        }
    }

    /// Second-round probability chosen so the two rounds combine to
    /// `p + gap`.
    pub fn mismatched(mut self, gap: f64) -> Self {
        let target = self.p + gap;
        self.p2 = Some((target - self.p1) / (1.0 - self.p1));
        self
    }

    /// `(p - p1) / (1 - p1)` unless overridden.
    pub fn second_probability(&self) -> f64 {
        self.p2
            .unwrap_or((self.p - self.p1) / (1.0 - self.p1))
    }

    fn validate(&self) -> Result<ClauseUniverse> {
        let universe = ClauseUniverse::new(self.n, self.k)?;
        if universe.size() > 64 {
            return Err(Error::Refused(format!(
                "identity histogram needs at most 64 clauses, universe has {}",
                universe.size()
            )));
        }
        let p2 = self.second_probability();
        for (name, v) in [("p", self.p), ("p1", self.p1), ("p2", p2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameters(format!("{name}={v} outside [0, 1]")));
            }
        }
        if self.samples == 0 || self.hash_buckets == 0 {
            return Err(Error::InvalidParameters("samples and buckets must be positive".into()));
        }
        Ok(universe)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoStepReport {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub derived_p: f64,
    pub clause_count: ChiSquareResult,
    pub identity: ChiSquareResult,
    /// Bonferroni combination of both tests.
    pub p_value: f64,
}

fn clause_mask(universe: &ClauseUniverse, formula: &Formula) -> Result<u64> {
    let mut mask = 0u64;
    for c in formula.clauses() {
        mask |= 1 << universe.index_of(c)?;
    }
    Ok(mask)
}

/// Draws clause sets from the one-round process with probability `p` and
/// from the two-round process, and compares clause-count and hashed
/// identity histograms.
pub fn two_step_test(config: &TwoStepTestConfig) -> Result<TwoStepReport> {
    let universe = config.validate()?;
    let p2 = config.second_probability();
    let size = universe.size() as usize;
    let buckets = config.hash_buckets;
    let mut counts = [vec![0u64; size + 1], vec![0u64; size + 1]];
    let mut ids = [vec![0u64; buckets], vec![0u64; buckets]];
    for i in 0..config.samples as u64 {
        let one = ProcessConfig::unrestricted(config.n, config.k, config.p, derive_seed(config.seed, &[0, i]));
        let two = ProcessConfig::two_step(config.n, config.k, config.p1, p2, false, derive_seed(config.seed, &[1, i]));
        let f1 = generate_unrestricted(&one)?;
        let out = generate_two_step(&two)?;
        let mut f2 = out.first.clone();
        for c in out.second.clauses() {
            f2.push(c.clone())?;
        }
        for (side, f) in [(0, &f1), (1, &f2)] {
            counts[side][f.len()] += 1;
            ids[side][(splitmix64(clause_mask(&universe, f)?) % buckets as u64) as usize] += 1;
        }
    }
    let clause_count = chi_square_two_sample(&counts[0], &counts[1]);
    let identity = chi_square_two_sample(&ids[0], &ids[1]);
    let p_value = (2.0 * clause_count.p_value.min(identity.p_value)).min(1.0);
    Ok(TwoStepReport {
        n: config.n,
        k: config.k,
        samples: config.samples,
        p: config.p,
        p1: config.p1,
        p2,
        derived_p: config.p1 + p2 - config.p1 * p2,
        clause_count,
        identity,
        p_value,
    })
}

/// Repeats the test with derived seeds and checks the combined p-values
/// against Uniform(0, 1).
pub fn two_step_ks(config: &TwoStepTestConfig, repetitions: usize) -> Result<(Vec<f64>, KsResult)> {
    let mut p_values = Vec::with_capacity(repetitions);
    for r in 0..repetitions as u64 {
        let cfg = TwoStepTestConfig {
            seed: derive_seed(config.seed, &[2, r]),
            ..config.clone()
        };
        p_values.push(two_step_test(&cfg)?.clause_count.p_value);
    }
    let ks = ks_uniform(&p_values);
    Ok((p_values, ks))
}
