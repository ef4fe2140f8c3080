//! Literals, clauses, formulas and truth assignments.
//!
//! Variables are zero-based indices in `[0, n)`. DIMACS uses one-based
//! signed integers; conversion happens only at the I/O boundary.

mod dimacs;
mod graph;
mod residual;
mod support;
mod universe;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub use dimacs::{read_dimacs, write_dimacs, ReadOptions};
pub use graph::{connected_components, components_of_clauses, InducedGraph};
pub use residual::{restrict_and_simplify, simplify_partial, ResidualFormula};
pub use support::{
    count_supports, supporter, support_count, support_count_partial, unique_true_literal,
};
pub use universe::{binomial, clause_universe_size, ClauseUniverse};

/// A variable together with a polarity, packed as `2 * var + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(u32);

impl Literal {
    pub fn new(var: usize, positive: bool) -> Self {
        debug_assert!(var < (u32::MAX >> 1) as usize);
        Literal(((var as u32) << 1) | (!positive as u32))
    }

    pub fn positive(var: usize) -> Self {
        Self::new(var, true)
    }

    pub fn negative(var: usize) -> Self {
        Self::new(var, false)
    }

    #[inline]
    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub fn negate(self) -> Self {
        Literal(self.0 ^ 1)
    }

    /// Truth value of the literal when its variable takes `value`.
    #[inline]
    pub fn eval(self, value: bool) -> bool {
        value == self.is_positive()
    }

    /// Dense code usable as an index into per-literal tables of size `2n`.
    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_code(code: usize) -> Self {
        Literal(code as u32)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn from_dimacs(lit: i64) -> Result<Self> {
        if lit == 0 {
            return Err(Error::Range("literal 0 is the clause terminator".into()));
        }
        let var = lit.unsigned_abs() as usize - 1;
        Ok(Literal::new(var, lit > 0))
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A disjunction of literals over distinct variables, sorted by variable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    lits: SmallVec<[Literal; 4]>,
}

impl Clause {
    /// Builds a clause, sorting literals into canonical order.
    ///
    /// Fails on an empty literal list or on a repeated variable.
    pub fn new(lits: impl IntoIterator<Item = Literal>) -> Result<Self> {
        let mut lits: SmallVec<[Literal; 4]> = lits.into_iter().collect();
        if lits.is_empty() {
            return Err(Error::InvalidParameters("empty clause".into()));
        }
        lits.sort_unstable();
        for pair in lits.windows(2) {
            if pair[0].var() == pair[1].var() {
                return Err(Error::InvalidParameters(format!(
                    "variable {} repeated in clause",
                    pair[0].var() + 1
                )));
            }
        }
        Ok(Clause { lits })
    }

    pub fn from_dimacs(lits: &[i64]) -> Result<Self> {
        Clause::new(
            lits.iter()
                .map(|&l| Literal::from_dimacs(l))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Caller guarantees canonical order and distinct variables.
    pub(crate) fn from_sorted_unchecked(lits: SmallVec<[Literal; 4]>) -> Self {
        debug_assert!(lits.windows(2).all(|w| w[0].var() < w[1].var()));
        Clause { lits }
    }

    #[inline]
    pub fn literals(&self) -> &[Literal] {
        &self.lits
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.lits.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.lits.iter().map(|l| l.var())
    }

    pub fn max_var(&self) -> usize {
        self.lits.last().map(|l| l.var()).unwrap_or(0)
    }

    pub fn literal_of(&self, var: usize) -> Option<Literal> {
        self.lits.iter().copied().find(|l| l.var() == var)
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.literal_of(var).is_some()
    }

    pub fn evaluate(&self, assignment: &Assignment) -> bool {
        self.lits.iter().any(|l| l.eval(assignment.get(l.var())))
    }

    pub fn to_dimacs(&self) -> Vec<i64> {
        self.lits.iter().map(|l| l.to_dimacs()).collect()
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l:?}")?;
        }
        write!(f, ")")
    }
}

/// An ordered list of distinct clauses over `n` variables.
///
/// When built with a width, every clause must have exactly that many
/// literals. Clause order records the order of acceptance.
#[derive(Clone)]
pub struct Formula {
    n: usize,
    width: Option<usize>,
    clauses: Vec<Clause>,
    seen: HashSet<Clause>,
}

impl Formula {
    /// Empty formula over `n` variables whose clauses have width exactly `k`.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameters(format!(
                "clause width k={k} must satisfy 1 <= k <= n={n}"
            )));
        }
        Ok(Formula {
            n,
            width: Some(k),
            clauses: Vec::new(),
            seen: HashSet::new(),
        })
    }

    /// Empty formula accepting clauses of any width.
    pub fn mixed(n: usize) -> Self {
        Formula {
            n,
            width: None,
            clauses: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn from_clauses(n: usize, k: usize, clauses: impl IntoIterator<Item = Clause>) -> Result<Self> {
        let mut f = Formula::new(n, k)?;
        for c in clauses {
            f.push(c)?;
        }
        Ok(f)
    }

    /// Parses clauses written as DIMACS literal lists, e.g. `&[&[1, -2, 3]]`.
    pub fn from_dimacs_clauses(n: usize, k: usize, clauses: &[&[i64]]) -> Result<Self> {
        Formula::from_clauses(
            n,
            k,
            clauses
                .iter()
                .map(|c| Clause::from_dimacs(c))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Appends a clause. Rejects duplicates, out-of-range variables and
    /// width mismatches.
    pub fn push(&mut self, clause: Clause) -> Result<()> {
        if let Some(k) = self.width {
            if clause.width() != k {
                return Err(Error::Width {
                    expected: k,
                    found: clause.width(),
                });
            }
        }
        if clause.max_var() >= self.n {
            return Err(Error::Range(format!(
                "variable {} exceeds n={}",
                clause.max_var() + 1,
                self.n
            )));
        }
        if self.seen.contains(&clause) {
            return Err(Error::DuplicateClause(format!("{clause:?}")));
        }
        self.seen.insert(clause.clone());
        self.clauses.push(clause);
        Ok(())
    }

    pub fn contains(&self, clause: &Clause) -> bool {
        self.seen.contains(clause)
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Declared clause width, `None` for mixed-width formulas.
    #[inline]
    pub fn width(&self) -> Option<usize> {
        self.width
    }

    #[inline]
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn satisfied_by(&self, assignment: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.evaluate(assignment))
    }

    /// Clause-to-variable incidence: for each variable the clause indices it occurs in.
    pub fn occurrences(&self) -> Vec<Vec<u32>> {
        let mut occ = vec![Vec::new(); self.n];
        for (ci, c) in self.clauses.iter().enumerate() {
            for v in c.vars() {
                occ[v].push(ci as u32);
            }
        }
        occ
    }

    /// The clauses whose variables all lie in `scope`, in original order.
    pub fn induced_subformula(&self, scope: &VarSet) -> Formula {
        let mut out = Formula {
            n: self.n,
            width: self.width,
            clauses: Vec::new(),
            seen: HashSet::new(),
        };
        for c in &self.clauses {
            if c.vars().all(|v| scope.contains(v)) {
                out.seen.insert(c.clone());
                out.clauses.push(c.clone());
            }
        }
        out
    }

    /// `(positive, negative)` occurrence counts of `var`.
    pub fn count_appearances(&self, var: usize) -> (usize, usize) {
        let mut pos = 0;
        let mut neg = 0;
        for c in &self.clauses {
            if let Some(l) = c.literal_of(var) {
                if l.is_positive() {
                    pos += 1;
                } else {
                    neg += 1;
                }
            }
        }
        (pos, neg)
    }

    /// Occurrence counts for every variable at once.
    pub fn appearance_table(&self) -> Vec<(usize, usize)> {
        let mut table = vec![(0, 0); self.n];
        for c in &self.clauses {
            for l in c.literals() {
                if l.is_positive() {
                    table[l.var()].0 += 1;
                } else {
                    table[l.var()].1 += 1;
                }
            }
        }
        table
    }

    pub fn induced_graph(&self) -> InducedGraph {
        InducedGraph::from_clauses(self.n, self.clauses.iter())
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.width == other.width && self.clauses == other.clauses
    }
}

impl Eq for Formula {}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Formula")
            .field("n", &self.n)
            .field("width", &self.width)
            .field("clauses", &self.clauses)
            .finish()
    }
}

/// A total truth assignment.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn all(n: usize, value: bool) -> Self {
        Assignment(vec![value; n])
    }

    pub fn from_vec(values: Vec<bool>) -> Self {
        Assignment(values)
    }

    /// Bit `i` of `mask` gives the value of variable `i`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Assignment((0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn to_mask(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |m, (i, &b)| m | ((b as u64) << i))
    }

    #[inline]
    pub fn get(&self, var: usize) -> bool {
        self.0[var]
    }

    #[inline]
    pub fn set(&mut self, var: usize, value: bool) {
        self.0[var] = value;
    }

    pub fn flip(&mut self, var: usize) {
        self.0[var] = !self.0[var];
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    pub fn hamming(&self, other: &Assignment) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn to_partial(&self) -> PartialAssignment {
        PartialAssignment(self.0.iter().map(|&b| Some(b)).collect())
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}

/// A tri-state assignment: `Some(value)` or unassigned.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartialAssignment(Vec<Option<bool>>);

impl PartialAssignment {
    pub fn unassigned(n: usize) -> Self {
        PartialAssignment(vec![None; n])
    }

    pub fn from_vec(values: Vec<Option<bool>>) -> Self {
        PartialAssignment(values)
    }

    /// `assignment` restricted to the variables of `scope`.
    pub fn restricted(assignment: &Assignment, scope: &VarSet) -> Self {
        PartialAssignment(
            (0..assignment.len())
                .map(|v| scope.contains(v).then(|| assignment.get(v)))
                .collect(),
        )
    }

    #[inline]
    pub fn get(&self, var: usize) -> Option<bool> {
        self.0[var]
    }

    #[inline]
    pub fn set(&mut self, var: usize, value: Option<bool>) {
        self.0[var] = value;
    }

    pub fn is_assigned(&self, var: usize) -> bool {
        self.0[var].is_some()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn assigned_count(&self) -> usize {
        self.0.iter().filter(|v| v.is_some()).count()
    }

    pub fn assigned_set(&self) -> VarSet {
        VarSet::from_iter(self.0.len(), (0..self.0.len()).filter(|&v| self.0[v].is_some()))
    }

    /// Literal value: `None` when the variable is unassigned.
    #[inline]
    pub fn eval(&self, lit: Literal) -> Option<bool> {
        self.0[lit.var()].map(|b| lit.eval(b))
    }

    /// Fills unassigned variables with `default`.
    pub fn complete(&self, default: bool) -> Assignment {
        Assignment(self.0.iter().map(|v| v.unwrap_or(default)).collect())
    }

    pub fn values(&self) -> &[Option<bool>] {
        &self.0
    }
}

impl fmt::Debug for PartialAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            let c = match v {
                Some(true) => '1',
                Some(false) => '0',
                None => '*',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A set of variables over a fixed universe `[0, n)`.
#[derive(Clone, PartialEq, Eq)]
pub struct VarSet {
    members: Vec<bool>,
    len: usize,
}

impl VarSet {
    pub fn empty(n: usize) -> Self {
        VarSet {
            members: vec![false; n],
            len: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        VarSet {
            members: vec![true; n],
            len: n,
        }
    }

    pub fn from_iter(n: usize, vars: impl IntoIterator<Item = usize>) -> Self {
        let mut s = VarSet::empty(n);
        for v in vars {
            s.insert(v);
        }
        s
    }

    #[inline]
    pub fn contains(&self, var: usize) -> bool {
        self.members[var]
    }

    pub fn insert(&mut self, var: usize) -> bool {
        let fresh = !self.members[var];
        if fresh {
            self.members[var] = true;
            self.len += 1;
        }
        fresh
    }

    pub fn remove(&mut self, var: usize) -> bool {
        let present = self.members[var];
        if present {
            self.members[var] = false;
            self.len -= 1;
        }
        present
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn universe(&self) -> usize {
        self.members.len()
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(v, &m)| m.then_some(v))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        let members: Vec<bool> = self
            .members
            .iter()
            .zip(&other.members)
            .map(|(a, b)| *a || *b)
            .collect();
        let len = members.iter().filter(|&&b| b).count();
        VarSet { members, len }
    }

    pub fn intersection(&self, other: &VarSet) -> VarSet {
        let members: Vec<bool> = self
            .members
            .iter()
            .zip(&other.members)
            .map(|(a, b)| *a && *b)
            .collect();
        let len = members.iter().filter(|&&b| b).count();
        VarSet { members, len }
    }

    pub fn is_subset(&self, other: &VarSet) -> bool {
        self.members
            .iter()
            .zip(&other.members)
            .all(|(a, b)| !*a || *b)
    }

    pub fn is_disjoint(&self, other: &VarSet) -> bool {
        self.members
            .iter()
            .zip(&other.members)
            .all(|(a, b)| !(*a && *b))
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for VarSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}
