use serde::Serialize;
use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::formula::clause_universe_size;

/// Extremes of `Pr[X = m] * sqrt(m)` for `X ~ Binomial(M, m / M)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandReport {
    pub n: usize,
    pub k: usize,
    pub universe: u64,
    pub min: f64,
    pub min_at: u64,
    pub max: f64,
    pub max_at: u64,
}

/// `Pr[X = m] * sqrt(m)` with `X ~ Binomial(universe, m / universe)`.
pub fn scaled_mode_probability(universe: u64, m: u64) -> f64 {
    let p = m as f64 / universe as f64;
    let dist = Binomial::new(p, universe).expect("probability in [0, 1]");
    dist.ln_pmf(m).exp() * (m as f64).sqrt()
}

/// Band over `1 <= m <= M / 2`. Past the midpoint the variance of `X`
/// shrinks and the scaled value grows without a constant bound.
pub fn binomial_band(n: usize, k: usize) -> Result<BandReport> {
    let universe = clause_universe_size(n, k)?;
    if universe < 2 {
        return Err(Error::InvalidParameters("universe too small".into()));
    }
    let mut report = BandReport {
        n,
        k,
        universe,
        min: f64::INFINITY,
        min_at: 0,
        max: 0.0,
        max_at: 0,
    };
    for m in 1..=universe / 2 {
        let v = scaled_mode_probability(universe, m);
        if v < report.min {
            report.min = v;
            report.min_at = m;
        }
        if v > report.max {
            report.max = v;
            report.max_at = m;
        }
    }
    Ok(report)
}
