//! Expanding sets, cores and satellite variables of a satisfied formula.
//!
//! All three are computed relative to a reference assignment `psi`: a
//! variable supports a clause when its literal is the unique true literal
//! of the clause under `psi`. The expanding set and the core come out of
//! peeling loops that remove one violating variable at a time; the removal
//! conditions are antitone in the current set, so the fixpoint does not
//! depend on the removal order.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::formula::{
    components_of_clauses, count_supports, restrict_and_simplify, supporter, Assignment, Formula,
    VarSet,
};

/// A positive rational multiplier `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factor {
    pub num: u64,
    pub den: u64,
}

impl Factor {
    pub const fn new(num: u64, den: u64) -> Self {
        Factor { num, den }
    }

    pub const fn whole(num: u64) -> Self {
        Factor { num, den: 1 }
    }

    /// `count < self * t`
    #[inline]
    pub fn below(self, count: usize, t: u64) -> bool {
        (count as u128) * (self.den as u128) < (self.num as u128) * (t as u128)
    }

    /// `count > self * t`
    #[inline]
    pub fn above(self, count: usize, t: u64) -> bool {
        (count as u128) * (self.den as u128) > (self.num as u128) * (t as u128)
    }

    /// `self <= other`
    pub fn at_most(self, other: Factor) -> bool {
        (self.num as u128) * (other.den as u128) <= (other.num as u128) * (self.den as u128)
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl Serialize for Factor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CoreParams {
    pub t: u64,
    /// Initial support requirement, over the whole formula.
    pub init_factor: Factor,
    /// Support requirement inside the current set while peeling.
    pub keep_factor: Factor,
    /// Largest allowed number of appearances outside the induced core formula.
    pub core_out_factor: Factor,
    /// Support requirement inside the induced core formula.
    pub core_support_factor: Factor,
}

impl CoreParams {
    /// Thresholds `502t`, `500t`, `t/11` and `10t/11`.
    pub fn asymptotic(t: u64) -> Self {
        CoreParams {
            t,
            init_factor: Factor::whole(502),
            keep_factor: Factor::whole(500),
            core_out_factor: Factor::new(1, 11),
            core_support_factor: Factor::new(10, 11),
        }
    }

    /// Thresholds usable at a few thousand variables: `t`, `t`, `2t` and `10t/11`.
    pub fn desk(t: u64) -> Self {
        CoreParams {
            t,
            init_factor: Factor::whole(1),
            keep_factor: Factor::whole(1),
            core_out_factor: Factor::whole(2),
            core_support_factor: Factor::new(10, 11),
        }
    }

    pub fn with_t(self, t: u64) -> Self {
        CoreParams { t, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let factors = [
            self.init_factor,
            self.keep_factor,
            self.core_out_factor,
            self.core_support_factor,
        ];
        if self.t == 0 {
            return Err(Error::InvalidParameters("t must be positive".into()));
        }
        if factors.iter().any(|f| f.num == 0 || f.den == 0) {
            return Err(Error::InvalidParameters("factors must be positive".into()));
        }
        if !self.keep_factor.at_most(self.init_factor) {
            return Err(Error::InvalidParameters(format!(
                "keep factor {} exceeds init factor {}",
                self.keep_factor, self.init_factor
            )));
        }
        if self.core_support_factor.num >= self.core_support_factor.den {
            return Err(Error::InvalidParameters(format!(
                "core support factor {} must be below 1",
                self.core_support_factor
            )));
        }
        Ok(())
    }
}

/// Which violating variable a peeling loop removes next.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RemovalOrder {
    #[default]
    LowestIndexFirst,
    HighestIndexFirst,
}

pub(crate) struct Worklist {
    order: RemovalOrder,
    heap: BinaryHeap<(Reverse<usize>, usize)>,
    queued: Vec<bool>,
}

impl Worklist {
    pub(crate) fn new(n: usize, order: RemovalOrder) -> Self {
        Worklist {
            order,
            heap: BinaryHeap::new(),
            queued: vec![false; n],
        }
    }

    pub(crate) fn push(&mut self, v: usize) {
        if !self.queued[v] {
            self.queued[v] = true;
            let key = match self.order {
                RemovalOrder::LowestIndexFirst => (Reverse(v), 0),
                RemovalOrder::HighestIndexFirst => (Reverse(0), v),
            };
            self.heap.push(key);
        }
    }

    pub(crate) fn pop(&mut self) -> Option<usize> {
        self.heap.pop().map(|(Reverse(a), b)| match self.order {
            RemovalOrder::LowestIndexFirst => a,
            RemovalOrder::HighestIndexFirst => b,
        })
    }
}

fn clause_supporters(formula: &Formula, psi: &Assignment) -> Vec<Option<usize>> {
    formula.clauses().iter().map(|c| supporter(c, psi)).collect()
}

fn check_psi(formula: &Formula, psi: &Assignment) -> Result<()> {
    if psi.len() != formula.num_vars() {
        return Err(Error::InvalidParameters(format!(
            "assignment over {} variables for a formula over {}",
            psi.len(),
            formula.num_vars()
        )));
    }
    Ok(())
}

/// Keeps every variable supporting at least `init_factor * t` clauses of the
/// formula, then peels variables supporting fewer than `keep_factor * t`
/// clauses of the formula induced on what is left.
pub fn build_expanding_set(formula: &Formula, psi: &Assignment, params: &CoreParams) -> Result<VarSet> {
    build_expanding_set_with(formula, psi, params, RemovalOrder::default())
}

pub fn build_expanding_set_with(
    formula: &Formula,
    psi: &Assignment,
    params: &CoreParams,
    order: RemovalOrder,
) -> Result<VarSet> {
    params.validate()?;
    check_psi(formula, psi)?;
    let n = formula.num_vars();
    let t = params.t;
    let clauses = formula.clauses();
    let occ = formula.occurrences();
    let owner = clause_supporters(formula, psi);

    let total = count_supports(formula, psi);
    let mut inside: Vec<bool> = (0..n).map(|v| !params.init_factor.below(total[v], t)).collect();
    let mut missing: Vec<u8> = clauses
        .iter()
        .map(|c| c.vars().filter(|&v| !inside[v]).count() as u8)
        .collect();
    let mut support = vec![0usize; n];
    for (ci, s) in owner.iter().enumerate() {
        if let Some(s) = *s {
            if missing[ci] == 0 {
                support[s] += 1;
            }
        }
    }

    let mut work = Worklist::new(n, order);
    for v in 0..n {
        if inside[v] && params.keep_factor.below(support[v], t) {
            work.push(v);
        }
    }
    let mut removed = 0usize;
    while let Some(v) = work.pop() {
        debug_assert!(inside[v] && params.keep_factor.below(support[v], t));
        inside[v] = false;
        removed += 1;
        for &ci in &occ[v] {
            let ci = ci as usize;
            missing[ci] += 1;
            if missing[ci] != 1 {
                continue;
            }
            if let Some(s) = owner[ci] {
                if s != v && inside[s] {
                    support[s] -= 1;
                    if params.keep_factor.below(support[s], t) {
                        work.push(s);
                    }
                }
            }
        }
    }
    assert!(removed <= n);
    Ok(VarSet::from_iter(n, (0..n).filter(|&v| inside[v])))
}

/// Peels `z` until every remaining variable appears in at most
/// `core_out_factor * t` clauses that leave the set and supports at least
/// `core_support_factor * t` clauses inside it.
pub fn build_core(formula: &Formula, z: &VarSet, psi: &Assignment, params: &CoreParams) -> Result<VarSet> {
    build_core_with(formula, z, psi, params, RemovalOrder::default())
}

pub fn build_core_with(
    formula: &Formula,
    z: &VarSet,
    psi: &Assignment,
    params: &CoreParams,
    order: RemovalOrder,
) -> Result<VarSet> {
    params.validate()?;
    check_psi(formula, psi)?;
    let n = formula.num_vars();
    let t = params.t;
    let clauses = formula.clauses();
    let occ = formula.occurrences();
    let owner = clause_supporters(formula, psi);

    let mut inside: Vec<bool> = (0..n).map(|v| z.contains(v)).collect();
    let mut missing: Vec<u8> = clauses
        .iter()
        .map(|c| c.vars().filter(|&v| !inside[v]).count() as u8)
        .collect();
    let mut outside = vec![0usize; n];
    let mut support = vec![0usize; n];
    for (ci, c) in clauses.iter().enumerate() {
        if missing[ci] == 0 {
            if let Some(s) = owner[ci] {
                support[s] += 1;
            }
        } else {
            for v in c.vars() {
                outside[v] += 1;
            }
        }
    }
    let violates = |v: usize, outside: &[usize], support: &[usize]| {
        params.core_out_factor.above(outside[v], t) || params.core_support_factor.below(support[v], t)
    };

    let mut work = Worklist::new(n, order);
    for v in 0..n {
        if inside[v] && violates(v, &outside, &support) {
            work.push(v);
        }
    }
    let mut removed = 0usize;
    while let Some(v) = work.pop() {
        debug_assert!(inside[v] && violates(v, &outside, &support));
        inside[v] = false;
        removed += 1;
        for &ci in &occ[v] {
            let ci = ci as usize;
            missing[ci] += 1;
            if missing[ci] != 1 {
                continue;
            }
            for u in clauses[ci].vars() {
                if u != v && inside[u] {
                    outside[u] += 1;
                    if violates(u, &outside, &support) {
                        work.push(u);
                    }
                }
            }
            if let Some(s) = owner[ci] {
                if s != v && inside[s] {
                    support[s] -= 1;
                    if violates(s, &outside, &support) {
                        work.push(s);
                    }
                }
            }
        }
    }
    assert!(removed <= n);
    Ok(VarSet::from_iter(n, (0..n).filter(|&v| inside[v])))
}

/// Satellite levels: the core is level 0; a variable outside the levels so
/// far joins level `i` when some clause pairs it with literals that are all
/// false under the assignment, over lower levels, at least one at `i - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatelliteClosure {
    pub levels: Vec<Option<usize>>,
    pub satellites: VarSet,
}

impl SatelliteClosure {
    /// Variables grouped by level, level 0 first.
    pub fn by_level(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (v, l) in self.levels.iter().enumerate() {
            if let Some(l) = *l {
                if out.len() <= l {
                    out.resize(l + 1, Vec::new());
                }
                out[l].push(v);
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        self.levels.iter().flatten().copied().max().unwrap_or(0)
    }
}

pub fn satellite_closure(formula: &Formula, core: &VarSet, phi: &Assignment) -> Result<SatelliteClosure> {
    check_psi(formula, phi)?;
    let n = formula.num_vars();
    let clauses = formula.clauses();
    let occ = formula.occurrences();
    let mut levels: Vec<Option<usize>> = vec![None; n];
    let mut uncovered: Vec<u8> = clauses.iter().map(|c| c.width() as u8).collect();
    // Covered literals that are true; such a clause never forces anything.
    let mut blocked: Vec<bool> = vec![false; clauses.len()];

    let mut frontier: Vec<usize> = core.iter().collect();
    for &v in &frontier {
        levels[v] = Some(0);
    }
    let mut level = 0usize;
    let mut satellites = VarSet::empty(n);
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &v in &frontier {
            for &ci in &occ[v] {
                let ci = ci as usize;
                let c = &clauses[ci];
                uncovered[ci] -= 1;
                let lit = c.literal_of(v).expect("occurrence lists are exact");
                if lit.eval(phi.get(v)) {
                    blocked[ci] = true;
                }
                if uncovered[ci] != 1 || blocked[ci] {
                    continue;
                }
                // The remaining variable may already have been found this round.
                if let Some(x) = c.vars().find(|&u| levels[u].is_none()) {
                    levels[x] = Some(level + 1);
                    satellites.insert(x);
                    next.push(x);
                }
            }
        }
        frontier = next;
        level += 1;
    }
    Ok(SatelliteClosure { levels, satellites })
}

/// Expanding set, core, satellites and the residual left after fixing the
/// core and satellites to `psi`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreReport {
    pub t: u64,
    pub expanding: VarSet,
    pub core: VarSet,
    pub satellites: VarSet,
    pub satellite_levels: Vec<Vec<usize>>,
    /// Component sizes of the residual formula, largest first.
    pub residual_components: Vec<usize>,
    pub psi: Assignment,
}

impl CoreReport {
    /// Fraction of variables in the core or among its satellites.
    pub fn coverage(&self) -> f64 {
        let n = self.psi.len();
        if n == 0 {
            return 1.0;
        }
        (self.core.len() + self.satellites.len()) as f64 / n as f64
    }

    pub fn largest_component(&self) -> usize {
        self.residual_components.first().copied().unwrap_or(0)
    }

    /// `(size, count)` pairs in increasing size.
    pub fn component_histogram(&self) -> Vec<(usize, usize)> {
        let mut h: BTreeMap<usize, usize> = BTreeMap::new();
        for &s in &self.residual_components {
            *h.entry(s).or_default() += 1;
        }
        h.into_iter().collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "t": self.t,
            "Z": self.expanding.to_vec(),
            "H": self.core.to_vec(),
            "S": self.satellites.to_vec(),
            "satellite_levels": self.satellite_levels.iter().skip(1).collect::<Vec<_>>(),
            "coverage": self.coverage(),
            "residual_components": self.residual_components,
            "residual_histogram": self.component_histogram(),
            "psi": self.psi.values().iter().enumerate()
                .map(|(v, &b)| if b { v as i64 + 1 } else { -(v as i64 + 1) })
                .collect::<Vec<_>>(),
        })
    }
}

pub fn analyze_structure(formula: &Formula, psi: &Assignment, params: &CoreParams) -> Result<CoreReport> {
    check_psi(formula, psi)?;
    if !formula.satisfied_by(psi) {
        return Err(Error::Contract(
            "structure analysis needs an assignment satisfying the formula".into(),
        ));
    }
    let expanding = build_expanding_set(formula, psi, params)?;
    let core = build_core(formula, &expanding, psi, params)?;
    let closure = satellite_closure(formula, &core, psi)?;
    let fixed = core.union(&closure.satellites);
    let residual = restrict_and_simplify(formula, &fixed, psi)?;
    let components = components_of_clauses(formula.num_vars(), residual.clauses().iter());
    debug_assert!(components.iter().flatten().all(|&v| !fixed.contains(v)));
    Ok(CoreReport {
        t: params.t,
        expanding,
        core,
        satellite_levels: closure.by_level(),
        satellites: closure.satellites,
        residual_components: components.iter().map(Vec::len).collect(),
        psi: psi.clone(),
    })
}

/// Runs [`analyze_structure`] for each threshold and keeps the report with
/// the largest core plus satellites (the smaller `t` on ties).
pub fn analyze_sweep(
    formula: &Formula,
    psi: &Assignment,
    base: &CoreParams,
    thresholds: &[u64],
) -> Result<CoreReport> {
    let mut best: Option<CoreReport> = None;
    for &t in thresholds {
        let report = analyze_structure(formula, psi, &base.with_t(t))?;
        let covered = report.core.len() + report.satellites.len();
        if best
            .as_ref()
            .is_none_or(|b| covered > b.core.len() + b.satellites.len())
        {
            best = Some(report);
        }
    }
    best.ok_or_else(|| Error::InvalidParameters("empty threshold sweep".into()))
}
