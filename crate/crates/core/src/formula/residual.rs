use smallvec::SmallVec;

use super::{Assignment, Clause, Formula, PartialAssignment, VarSet};
use crate::error::{Error, Result};

/// A mixed-width formula left after fixing some variables and simplifying.
///
/// No stored clause is empty and no literal refers to an assigned variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualFormula {
    n: usize,
    clauses: Vec<Clause>,
}

impl ResidualFormula {
    pub fn new(n: usize, clauses: Vec<Clause>) -> Self {
        debug_assert!(clauses.iter().all(|c| c.max_var() < n));
        ResidualFormula { n, clauses }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Variables occurring in at least one residual clause.
    pub fn vars(&self) -> VarSet {
        VarSet::from_iter(self.n, self.clauses.iter().flat_map(|c| c.vars()))
    }

    pub fn into_clauses(self) -> Vec<Clause> {
        self.clauses
    }
}

/// Sets the variables of `fixed` according to `values` and simplifies:
/// clauses with a true literal vanish, false literals are dropped. An
/// emptied clause is reported as [`Error::Conflict`].
pub fn restrict_and_simplify(
    formula: &Formula,
    fixed: &VarSet,
    values: &Assignment,
) -> Result<ResidualFormula> {
    simplify_partial(formula, &PartialAssignment::restricted(values, fixed))
}

/// Simplifies `formula` under the assigned variables of `partial`.
pub fn simplify_partial(formula: &Formula, partial: &PartialAssignment) -> Result<ResidualFormula> {
    let mut out = Vec::new();
    'clauses: for (ci, c) in formula.clauses().iter().enumerate() {
        let mut kept: SmallVec<[_; 4]> = SmallVec::new();
        for &l in c.literals() {
            match partial.eval(l) {
                Some(true) => continue 'clauses,
                Some(false) => {}
                None => kept.push(l),
            }
        }
        if kept.is_empty() {
            return Err(Error::Conflict { clause: ci });
        }
        out.push(Clause::from_sorted_unchecked(kept));
    }
    Ok(ResidualFormula::new(formula.num_vars(), out))
}
