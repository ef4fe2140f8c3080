//! Shared fixtures for the benchmarks.

use satprocess::generator::{generate, ProcessConfig};
use satprocess::{Assignment, Formula};

/// Planted 3-CNF with `ratio * n` clauses and its planted assignment.
pub fn planted(n: usize, ratio: u64, seed: u64) -> (Formula, Assignment) {
    let (f, trace) = generate(&ProcessConfig::planted(n, 3, ratio * n as u64, seed)).expect("valid planted parameters");
    (f, trace.witness.expect("planted witness"))
}
