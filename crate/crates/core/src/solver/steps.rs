use smallvec::SmallVec;

use super::{FailureReason, FlipMode, SolverConfig};
use crate::corebuilder::{RemovalOrder, Worklist};
use crate::error::{Error, Result};
use crate::formula::{
    components_of_clauses, count_supports, Assignment, Clause, Formula, Literal, PartialAssignment,
    ResidualFormula,
};

/// TRUE exactly for variables with more positive than negative occurrences.
pub fn majority_vote(formula: &Formula) -> Assignment {
    let table = formula.appearance_table();
    Assignment::from_vec(table.into_iter().map(|(pos, neg)| pos > neg).collect())
}

fn support_of(formula: &Formula, occ: &[Vec<u32>], assignment: &Assignment, v: usize) -> usize {
    occ[v]
        .iter()
        .filter(|&&ci| crate::formula::supporter(&formula.clauses()[ci as usize], assignment) == Some(v))
        .count()
}

/// Flip rounds starting from `start`; returns the final assignment and the
/// number of flips in each round performed.
pub fn reassignment_rounds(formula: &Formula, start: &Assignment, config: &SolverConfig) -> (Assignment, Vec<usize>) {
    let n = formula.num_vars();
    let factor = config.reassign_flip_factor;
    let t = config.t;
    let mut current = start.clone();
    let mut flips = Vec::new();
    let occ = match config.flip_mode {
        FlipMode::Sequential => formula.occurrences(),
        FlipMode::Batch => Vec::new(),
    };
    for _ in 0..config.reassign_iters {
        let flipped = match config.flip_mode {
            FlipMode::Batch => {
                let support = count_supports(formula, &current);
                let to_flip: Vec<usize> = (0..n).filter(|&v| factor.below(support[v], t)).collect();
                for &v in &to_flip {
                    current.flip(v);
                }
                to_flip.len()
            }
            FlipMode::Sequential => {
                let mut count = 0;
                for v in 0..n {
                    if factor.below(support_of(formula, &occ, &current, v), t) {
                        current.flip(v);
                        count += 1;
                    }
                }
                count
            }
        };
        flips.push(flipped);
        if flipped == 0 {
            break;
        }
    }
    (current, flips)
}

pub fn reassignment(formula: &Formula, start: &Assignment, config: &SolverConfig) -> Assignment {
    reassignment_rounds(formula, start, config).0
}

/// Unassigns, lowest index first, every variable supporting fewer than
/// `unassign_factor * t` clauses; a clause counts for its supporter only
/// while all its other literals are assigned and false.
pub fn unassignment(formula: &Formula, psi: &Assignment, config: &SolverConfig) -> PartialAssignment {
    unassignment_with_order(formula, psi, config, RemovalOrder::LowestIndexFirst)
}

pub fn unassignment_with_order(
    formula: &Formula,
    psi: &Assignment,
    config: &SolverConfig,
    order: RemovalOrder,
) -> PartialAssignment {
    let n = formula.num_vars();
    let t = config.t;
    let factor = config.unassign_factor;
    let occ = formula.occurrences();
    let mut owner: Vec<Option<usize>> = formula
        .clauses()
        .iter()
        .map(|c| crate::formula::supporter(c, psi))
        .collect();
    let mut support = vec![0usize; n];
    for s in owner.iter().flatten() {
        support[*s] += 1;
    }
    let mut partial = psi.to_partial();
    let mut work = Worklist::new(n, order);
    for v in 0..n {
        if factor.below(support[v], t) {
            work.push(v);
        }
    }
    while let Some(v) = work.pop() {
        partial.set(v, None);
        for &ci in &occ[v] {
            let ci = ci as usize;
            if let Some(s) = owner[ci].take() {
                if s != v && partial.is_assigned(s) {
                    support[s] -= 1;
                    if factor.below(support[s], t) {
                        work.push(s);
                    }
                }
            }
        }
    }
    partial
}

/// Result of unit propagation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Propagation {
    pub assignment: PartialAssignment,
    /// Clauses left unsatisfied, without false literals and with no unit clause.
    pub residual: ResidualFormula,
    pub rounds: usize,
    /// Round (from 1) in which each variable was set by propagation.
    pub levels: Vec<Option<usize>>,
}

/// Round-based unit propagation: every round sets all variables forced by
/// the unit clauses present at its start.
pub fn unit_propagation(residual: &ResidualFormula, xi: &PartialAssignment) -> Result<Propagation> {
    let n = residual.num_vars();
    let clauses = residual.clauses();
    let mut assignment = xi.clone();
    let mut levels: Vec<Option<usize>> = vec![None; n];
    let mut satisfied = vec![false; clauses.len()];
    let mut free = vec![0usize; clauses.len()];
    let mut occ: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut pending: Vec<usize> = Vec::new();
    for (ci, c) in clauses.iter().enumerate() {
        for &l in c.literals() {
            occ[l.var()].push(ci as u32);
            match assignment.eval(l) {
                Some(true) => satisfied[ci] = true,
                Some(false) => {}
                None => free[ci] += 1,
            }
        }
        if !satisfied[ci] {
            match free[ci] {
                0 => return Err(Error::Conflict { clause: ci }),
                1 => pending.push(ci),
                _ => {}
            }
        }
    }

    let mut rounds = 0;
    while !pending.is_empty() {
        let mut forced: Vec<Literal> = Vec::new();
        for &ci in &pending {
            if satisfied[ci] {
                continue;
            }
            let lit = clauses[ci]
                .literals()
                .iter()
                .copied()
                .find(|&l| assignment.eval(l).is_none())
                .expect("unit clause has a free literal");
            if forced.contains(&lit.negate()) {
                return Err(Error::Conflict { clause: ci });
            }
            if !forced.contains(&lit) {
                forced.push(lit);
            }
        }
        pending.clear();
        if forced.is_empty() {
            break;
        }
        rounds += 1;
        for &lit in &forced {
            assignment.set(lit.var(), Some(lit.is_positive()));
            levels[lit.var()] = Some(rounds);
        }
        for &lit in &forced {
            for &ci in &occ[lit.var()] {
                let ci = ci as usize;
                if satisfied[ci] {
                    continue;
                }
                let own = clauses[ci].literal_of(lit.var()).expect("occurrence");
                if own == lit {
                    satisfied[ci] = true;
                    continue;
                }
                free[ci] -= 1;
                match free[ci] {
                    0 => return Err(Error::Conflict { clause: ci }),
                    1 => pending.push(ci),
                    _ => {}
                }
            }
        }
    }

    let left: Vec<Clause> = clauses
        .iter()
        .zip(&satisfied)
        .filter(|(_, &s)| !s)
        .map(|(c, _)| {
            let kept: SmallVec<[Literal; 4]> = c
                .literals()
                .iter()
                .copied()
                .filter(|&l| assignment.eval(l).is_none())
                .collect();
            Clause::from_sorted_unchecked(kept)
        })
        .collect();
    Ok(Propagation {
        assignment,
        residual: ResidualFormula::new(n, left),
        rounds,
        levels,
    })
}

/// Lexicographically least satisfying assignment of one component, variables
/// in ascending order, FALSE before TRUE.
fn least_solution(vars: &[usize], clauses: &[&Clause]) -> Option<Vec<bool>> {
    let d = vars.len();
    let pos = |v: usize| vars.binary_search(&v).expect("variable of the component");
    // Clauses checked once their last variable (in search order) is set.
    let mut buckets: Vec<Vec<Vec<(usize, bool)>>> = vec![Vec::new(); d];
    for c in clauses {
        let lits: Vec<(usize, bool)> = c.literals().iter().map(|l| (pos(l.var()), l.is_positive())).collect();
        let last = lits.iter().map(|&(p, _)| p).max().expect("non-empty clause");
        buckets[last].push(lits);
    }
    let mut values = vec![false; d];
    // Number of values tried at each depth (0, 1 or 2).
    let mut tried = vec![0u8; d];
    let mut depth = 0usize;
    loop {
        if tried[depth] == 2 {
            tried[depth] = 0;
            if depth == 0 {
                return None;
            }
            depth -= 1;
            continue;
        }
        values[depth] = tried[depth] == 1;
        tried[depth] += 1;
        let ok = buckets[depth]
            .iter()
            .all(|c| c.iter().any(|&(p, positive)| values[p] == positive));
        if ok {
            if depth + 1 == d {
                return Some(values);
            }
            depth += 1;
        }
    }
}

/// Solves what is left component by component; unassigned variables outside
/// every component become FALSE.
pub fn exhaustive_component_search(
    residual: &ResidualFormula,
    xi: &PartialAssignment,
    config: &SolverConfig,
) -> std::result::Result<Assignment, FailureReason> {
    let n = residual.num_vars();
    let components = components_of_clauses(n, residual.clauses().iter());
    if components.iter().any(|c| c.len() > config.component_cap) {
        return Err(FailureReason::ComponentTooLarge);
    }
    let mut component_of = vec![usize::MAX; n];
    for (i, c) in components.iter().enumerate() {
        for &v in c {
            component_of[v] = i;
        }
    }
    let mut grouped: Vec<Vec<&Clause>> = vec![Vec::new(); components.len()];
    for c in residual.clauses() {
        grouped[component_of[c.literals()[0].var()]].push(c);
    }
    let mut out = xi.complete(false);
    for (vars, clauses) in components.iter().zip(&grouped) {
        debug_assert!(vars.iter().all(|&v| !xi.is_assigned(v)));
        let values = least_solution(vars, clauses).ok_or(FailureReason::ExhaustiveUnsat)?;
        for (&v, b) in vars.iter().zip(values) {
            out.set(v, b);
        }
    }
    Ok(out)
}
