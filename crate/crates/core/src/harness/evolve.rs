use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formula::{clause_universe_size, Formula};
use crate::generator::{generate_perm_process, Decision, ProcessConfig};
use crate::oracle::{summarize_with_limit, DEFAULT_ORACLE_LIMIT};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolveConfig {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Scanned-clause counts to snapshot at; the process runs to the largest.
    pub snapshots: Vec<u64>,
    pub oracle: bool,
    pub oracle_limit: usize,
    /// Hamming distance linking solutions into one cluster.
    pub link_distance: usize,
    pub conflict_budget: Option<u64>,
}

impl EvolveConfig {
    pub fn new(n: usize, k: usize, seed: u64, snapshots: Vec<u64>) -> Self {
        EvolveConfig {
            n,
            k,
            seed,
            snapshots,
            oracle: false,
            oracle_limit: DEFAULT_ORACLE_LIMIT,
            link_distance: 1,
            conflict_budget: None,
        }
    }

    pub fn with_oracle(mut self, oracle: bool) -> Self {
        self.oracle = oracle;
        self
    }

    /// Snapshots at `ratio * n` for each ratio, capped at the universe size.
    pub fn ratios(n: usize, k: usize, seed: u64, ratios: &[u64]) -> Result<Self> {
        let universe = clause_universe_size(n, k)?;
        let snaps = ratios.iter().map(|r| (r * n as u64).min(universe)).collect();
        Ok(EvolveConfig::new(n, k, seed, snaps))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub m: u64,
    pub accepted: usize,
    pub rejected: usize,
    pub beta: Option<u64>,
    pub frozen_fraction: Option<f64>,
    pub radius: Option<usize>,
    pub clusters: Option<usize>,
}

pub const EVOLVE_CSV_HEADER: &str = "m,accepted,rejected,beta,frozen_fraction,radius,clusters";

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn evolve_csv(rows: &[Snapshot]) -> String {
    let mut out = String::from(EVOLVE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.m,
            r.accepted,
            r.rejected,
            opt(&r.beta),
            opt(&r.frozen_fraction.map(|f| format!("{f:.6}"))),
            opt(&r.radius),
            opt(&r.clusters)
        )
        .expect("writing to a string");
    }
    out
}

/// Runs the permutation process once to the largest snapshot and reports
/// the state after each snapshot's prefix of the scan.
pub fn evolve(config: &EvolveConfig) -> Result<Vec<Snapshot>> {
    if config.oracle && config.n > config.oracle_limit {
        return Err(Error::Refused(format!(
            "oracle columns at n={} above the oracle limit {}",
            config.n, config.oracle_limit
        )));
    }
    let universe = clause_universe_size(config.n, config.k)?;
    let mut snaps = config.snapshots.clone();
    snaps.sort_unstable();
    snaps.dedup();
    let Some(&m_max) = snaps.last() else {
        return Ok(Vec::new());
    };
    if m_max > universe {
        return Err(Error::InvalidParameters(format!(
            "snapshot m={m_max} exceeds the {universe} possible clauses"
        )));
    }
    let mut process = ProcessConfig::perm(config.n, config.k, m_max, config.seed);
    process.conflict_budget = config.conflict_budget;
    let (_, trace) = generate_perm_process(&process)?;

    let mut prefix = Formula::new(config.n, config.k)?;
    let (mut accepted, mut rejected) = (0, 0);
    let mut events = trace.events.iter();
    let mut rows = Vec::with_capacity(snaps.len());
    let mut scanned = 0u64;
    for m in snaps {
        while scanned < m {
            let e = events.next().expect("trace covers every snapshot");
            match e.decision {
                Decision::Accepted => {
                    accepted += 1;
                    prefix.push(e.clause.clone())?;
                }
                Decision::Rejected => rejected += 1,
                Decision::NotDrawn => {}
            }
            scanned += 1;
        }
        let mut row = Snapshot {
            m,
            accepted,
            rejected,
            beta: None,
            frozen_fraction: None,
            radius: None,
            clusters: None,
        };
        if config.oracle {
            let s = summarize_with_limit(&prefix, config.link_distance, config.oracle_limit)?;
            row.beta = Some(s.beta);
            row.frozen_fraction = Some(s.frozen_fraction());
            row.radius = Some(s.concentration_radius);
            row.clusters = Some(s.clusters.len());
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_snapshot_is_unique_solution() {
        let cfg = EvolveConfig::new(5, 3, 11, vec![10, 80]).with_oracle(true);
        let rows = evolve(&cfg).unwrap();
        let last = rows.last().unwrap();
        assert_eq!(last.m, 80);
        assert_eq!(last.accepted, 70);
        assert_eq!(last.beta, Some(1));
        assert_eq!(last.frozen_fraction, Some(1.0));
        assert!(rows[0].beta.unwrap() >= 1);
    }

    #[test]
    fn snapshots_are_monotone() {
        let cfg = EvolveConfig::ratios(12, 3, 4, &[1, 2, 4, 8, 16]).unwrap().with_oracle(true);
        let rows = evolve(&cfg).unwrap();
        for w in rows.windows(2) {
            assert!(w[0].accepted <= w[1].accepted);
            assert!(w[0].rejected <= w[1].rejected);
            assert!(w[0].beta >= w[1].beta);
            assert!(w[0].frozen_fraction <= w[1].frozen_fraction);
        }
    }

    #[test]
    fn oracle_refused_above_limit() {
        let mut cfg = EvolveConfig::new(30, 3, 0, vec![30]).with_oracle(true);
        assert!(matches!(evolve(&cfg), Err(Error::Refused(_))));
        cfg.oracle = false;
        let rows = evolve(&cfg).unwrap();
        assert_eq!(rows[0].beta, None);
        assert!(evolve_csv(&rows).starts_with(EVOLVE_CSV_HEADER));
    }
}
