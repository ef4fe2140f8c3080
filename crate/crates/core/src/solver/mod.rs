//! Majority-vote based polynomial-time solver.
//!
//! The pipeline for a threshold `t`:
//!
//! 1. majority vote over literal occurrences;
//! 2. `reassign_iters` rounds flipping every variable that supports fewer
//!    than `reassign_flip_factor * t` clauses;
//! 3. unassigning variables that support fewer than `unassign_factor * t`
//!    clauses under the partial assignment, to a fixpoint;
//! 4. unit propagation on the simplified formula;
//! 5. exhaustive search of each connected component of what remains.
//!
//! The solver is incomplete: each stage can fail, and failures are reported
//! with a typed reason. A returned assignment always satisfies the input.

mod steps;

use serde::Serialize;

use crate::corebuilder::Factor;
use crate::formula::{components_of_clauses, simplify_partial, Assignment, Formula};

pub use steps::{
    exhaustive_component_search, majority_vote, reassignment, reassignment_rounds, unassignment,
    unassignment_with_order, unit_propagation, Propagation,
};

/// How flips within one reassignment round are applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipMode {
    /// Supports are taken from the assignment at the start of the round and
    /// all flips are applied together.
    #[default]
    Batch,
    /// Variables are scanned in index order and flipped immediately.
    Sequential,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub t: u64,
    pub reassign_iters: usize,
    pub reassign_flip_factor: Factor,
    pub unassign_factor: Factor,
    pub component_cap: usize,
    /// Thresholds tried in order; `t` alone when absent.
    pub t_sweep: Option<Vec<u64>>,
    pub flip_mode: FlipMode,
}

/// `ceil(log2 n)`, at least 1.
pub fn ceil_log2(n: usize) -> usize {
    if n <= 2 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Sweep fractions of the clause density, as `(num, den)`.
pub const SWEEP_FRACTIONS: [(u64, u64); 4] = [(1, 20), (1, 10), (1, 5), (2, 5)];

/// `ceil(f * m / n)` for each sweep fraction `f`, deduplicated, at least 1.
pub fn default_t_sweep(n: usize, m: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for (num, den) in SWEEP_FRACTIONS {
        let top = num * m as u64;
        let bottom = den * n.max(1) as u64;
        let t = top.div_ceil(bottom).max(1);
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

impl SolverConfig {
    /// Defaults for a formula over `n` variables: logarithmic round count and
    /// component cap, a single threshold `t`.
    pub fn new(n: usize, t: u64) -> Self {
        let log = ceil_log2(n);
        SolverConfig {
            t,
            reassign_iters: log,
            reassign_flip_factor: Factor::new(2, 3),
            unassign_factor: Factor::whole(1),
            component_cap: 3 * log,
            t_sweep: None,
            flip_mode: FlipMode::Batch,
        }
    }

    /// Defaults with the density-based threshold sweep for `formula`.
    pub fn for_formula(formula: &Formula) -> Self {
        let sweep = default_t_sweep(formula.num_vars(), formula.len());
        let mut c = SolverConfig::new(formula.num_vars(), sweep[0]);
        c.t_sweep = Some(sweep);
        c
    }

    pub fn with_sweep(mut self, sweep: Vec<u64>) -> Self {
        self.t_sweep = Some(sweep);
        self
    }

    pub fn thresholds(&self) -> Vec<u64> {
        match &self.t_sweep {
            Some(s) if !s.is_empty() => s.clone(),
            _ => vec![self.t],
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.thresholds().contains(&0) {
            return Err(crate::Error::InvalidParameters("t must be at least 1".into()));
        }
        if self.component_cap == 0 {
            return Err(crate::Error::InvalidParameters(
                "component cap must be at least 1".into(),
            ));
        }
        if self.reassign_flip_factor.den == 0 || self.unassign_factor.den == 0 {
            return Err(crate::Error::InvalidParameters("zero denominator".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    ComponentTooLarge,
    PropagationConflict,
    ExhaustiveUnsat,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FailureReason::ComponentTooLarge => "component_too_large",
            FailureReason::PropagationConflict => "propagation_conflict",
            FailureReason::ExhaustiveUnsat => "exhaustive_unsat",
        })
    }
}

/// What each stage did for one threshold.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StageDiagnostics {
    pub t: u64,
    pub flips_per_round: Vec<usize>,
    pub unassigned: usize,
    pub propagation_rounds: usize,
    pub propagated: usize,
    pub residual_clauses: usize,
    /// Component sizes of the formula left for exhaustive search, largest first.
    pub component_sizes: Vec<usize>,
    /// Variables where the majority vote differs from the final assignment.
    pub majority_disagreement: Option<usize>,
    pub failure: Option<FailureReason>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub result: Result<Assignment, FailureReason>,
    /// One entry per threshold tried, in order.
    pub attempts: Vec<StageDiagnostics>,
}

impl SolveOutcome {
    pub fn is_success(&self) -> bool {
        self.result.is_ok()
    }

    pub fn assignment(&self) -> Option<&Assignment> {
        self.result.as_ref().ok()
    }

    /// Diagnostics of the last attempt (the successful one on success).
    pub fn last(&self) -> Option<&StageDiagnostics> {
        self.attempts.last()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (status, failure, assignment) = match &self.result {
            Ok(a) => (
                "sat",
                None,
                Some(
                    a.values()
                        .iter()
                        .enumerate()
                        .map(|(v, &b)| if b { v as i64 + 1 } else { -(v as i64 + 1) })
                        .collect::<Vec<_>>(),
                ),
            ),
            Err(r) => ("failed", Some(*r), None),
        };
        serde_json::json!({
            "result": status,
            "failure": failure,
            "t": self.is_success().then(|| self.last().map(|d| d.t)).flatten(),
            "assignment": assignment,
            "stages": self.attempts,
        })
    }
}

fn attempt(formula: &Formula, config: &SolverConfig, t: u64, majority: &Assignment) -> (Option<Assignment>, StageDiagnostics) {
    let mut diag = StageDiagnostics {
        t,
        ..Default::default()
    };
    let cfg = SolverConfig {
        t,
        ..config.clone()
    };
    let (reassigned, flips) = reassignment_rounds(formula, majority, &cfg);
    diag.flips_per_round = flips;

    let partial = unassignment(formula, &reassigned, &cfg);
    diag.unassigned = partial.len() - partial.assigned_count();

    let residual = match simplify_partial(formula, &partial) {
        Ok(r) => r,
        Err(_) => {
            diag.failure = Some(FailureReason::PropagationConflict);
            return (None, diag);
        }
    };
    let propagation = match unit_propagation(&residual, &partial) {
        Ok(p) => p,
        Err(_) => {
            diag.failure = Some(FailureReason::PropagationConflict);
            return (None, diag);
        }
    };
    diag.propagation_rounds = propagation.rounds;
    diag.propagated = propagation.assignment.assigned_count() - partial.assigned_count();
    diag.residual_clauses = propagation.residual.len();
    diag.component_sizes = components_of_clauses(formula.num_vars(), propagation.residual.clauses().iter())
        .iter()
        .map(Vec::len)
        .collect();

    match exhaustive_component_search(&propagation.residual, &propagation.assignment, &cfg) {
        Ok(a) => {
            assert!(
                formula.satisfied_by(&a),
                "pipeline produced an assignment that does not satisfy the formula"
            );
            diag.majority_disagreement = Some(majority.hamming(&a));
            (Some(a), diag)
        }
        Err(reason) => {
            diag.failure = Some(reason);
            (None, diag)
        }
    }
}

/// Runs the pipeline for each configured threshold until one succeeds.
pub fn solve(formula: &Formula, config: &SolverConfig) -> SolveOutcome {
    let majority = majority_vote(formula);
    let mut attempts = Vec::new();
    let mut last_failure = FailureReason::ExhaustiveUnsat;
    for t in config.thresholds() {
        let (result, diag) = attempt(formula, config, t.max(1), &majority);
        if let Some(r) = diag.failure {
            last_failure = r;
        }
        attempts.push(diag);
        if let Some(a) = result {
            return SolveOutcome {
                result: Ok(a),
                attempts,
            };
        }
    }
    SolveOutcome {
        result: Err(last_failure),
        attempts,
    }
}

#[cfg(test)]
mod tests;
