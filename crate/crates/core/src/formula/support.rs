//! Support: a variable supports a clause when its literal is the only true
//! literal of that clause.

use super::{Assignment, Clause, Formula, Literal, PartialAssignment, VarSet};
use crate::error::{Error, Result};

/// The unique true literal of `clause` under `assignment`, if there is exactly one.
#[inline]
pub fn unique_true_literal(clause: &Clause, assignment: &Assignment) -> Option<Literal> {
    let mut found = None;
    for &l in clause.literals() {
        if l.eval(assignment.get(l.var())) {
            if found.is_some() {
                return None;
            }
            found = Some(l);
        }
    }
    found
}

/// The supporting variable of `clause` under `assignment`.
#[inline]
pub fn supporter(clause: &Clause, assignment: &Assignment) -> Option<usize> {
    unique_true_literal(clause, assignment).map(|l| l.var())
}

/// Number of clauses supported by `var`. With a scope, only clauses of the
/// induced subformula on the scope are counted.
pub fn support_count(
    formula: &Formula,
    assignment: &Assignment,
    var: usize,
    scope: Option<&VarSet>,
) -> Result<usize> {
    if var >= formula.num_vars() {
        return Err(Error::Range(format!(
            "variable {var} outside [0, {})",
            formula.num_vars()
        )));
    }
    Ok(formula
        .clauses()
        .iter()
        .filter(|c| scope.is_none_or(|s| c.vars().all(|v| s.contains(v))))
        .filter(|c| supporter(c, assignment) == Some(var))
        .count())
}

/// Support of every variable in one pass over the formula.
pub fn count_supports(formula: &Formula, assignment: &Assignment) -> Vec<usize> {
    let mut counts = vec![0; formula.num_vars()];
    for c in formula.clauses() {
        if let Some(v) = supporter(c, assignment) {
            counts[v] += 1;
        }
    }
    counts
}

/// Support under a partial assignment: the literal of `var` is true and every
/// other literal of the clause is assigned and false.
pub fn support_count_partial(
    formula: &Formula,
    partial: &PartialAssignment,
    var: usize,
) -> Result<usize> {
    if var >= formula.num_vars() {
        return Err(Error::Range(format!(
            "variable {var} outside [0, {})",
            formula.num_vars()
        )));
    }
    if !partial.is_assigned(var) {
        return Err(Error::Contract(format!(
            "support of unassigned variable {var} is undefined"
        )));
    }
    Ok(formula
        .clauses()
        .iter()
        .filter(|c| {
            c.literals().iter().all(|&l| match partial.eval(l) {
                Some(value) => value == (l.var() == var),
                None => false,
            }) && c.contains_var(var)
        })
        .count())
}
