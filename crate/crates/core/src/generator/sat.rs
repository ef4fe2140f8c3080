//! Complete satisfiability checking.
//!
//! [`CdclSolver`] is an incremental conflict-driven clause-learning solver
//! (two watched literals, first-UIP learning, activity-based branching with
//! phase saving, Luby restarts). Clauses can be added between calls and a
//! call can be made under assumption literals; learned clauses are always
//! consequences of the permanent clauses only.
//!
//! [`check_satisfiable`] runs pure-literal elimination followed by a fresh
//! solver and returns a witness.

use crate::formula::{Assignment, Formula, Literal};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Value {
    True,
    False,
    Unassigned,
}

#[derive(Clone, Copy)]
struct Watch {
    clause: u32,
    blocker: Literal,
}

struct StoredClause {
    lits: Vec<Literal>,
    learnt: bool,
    deleted: bool,
    lbd: u32,
    activity: f64,
}

/// Max-heap of variables keyed by activity.
struct VarOrder {
    heap: Vec<usize>,
    position: Vec<Option<usize>>,
}

impl VarOrder {
    fn new(n: usize) -> Self {
        VarOrder {
            heap: (0..n).collect(),
            position: (0..n).map(Some).collect(),
        }
    }

    fn contains(&self, v: usize) -> bool {
        self.position[v].is_some()
    }

    fn push(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.position[v] = Some(self.heap.len());
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.position[top] = None;
        if !self.heap.is_empty() {
            self.position[self.heap[0]] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if let Some(pos) = self.position[v] {
            self.sift_up(pos, act);
        }
    }

    fn better(a: usize, b: usize, act: &[f64]) -> bool {
        act[a] > act[b] || (act[a] == act[b] && a < b)
    }

    fn sift_up(&mut self, mut pos: usize, act: &[f64]) {
        let v = self.heap[pos];
        while pos > 0 {
            let parent = (pos - 1) / 2;
            let p = self.heap[parent];
            if !Self::better(v, p, act) {
                break;
            }
            self.heap[pos] = p;
            self.position[p] = Some(pos);
            pos = parent;
        }
        self.heap[pos] = v;
        self.position[v] = Some(pos);
    }

    fn sift_down(&mut self, mut pos: usize, act: &[f64]) {
        let v = self.heap[pos];
        let len = self.heap.len();
        loop {
            let left = 2 * pos + 1;
            if left >= len {
                break;
            }
            let right = left + 1;
            let child = if right < len && Self::better(self.heap[right], self.heap[left], act) {
                right
            } else {
                left
            };
            let c = self.heap[child];
            if !Self::better(c, v, act) {
                break;
            }
            self.heap[pos] = c;
            self.position[c] = Some(pos);
            pos = child;
        }
        self.heap[pos] = v;
        self.position[v] = Some(pos);
    }
}

/// Outcome of a solver call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
    /// The conflict limit was reached first.
    Unknown,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolverStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
}

pub struct CdclSolver {
    n: usize,
    clauses: Vec<StoredClause>,
    watches: Vec<Vec<Watch>>,
    values: Vec<Value>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    trail: Vec<Literal>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    clause_inc: f64,
    order: VarOrder,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    learnt_count: usize,
    next_reduce: u64,
    conflict_limit: Option<u64>,
    stats: SolverStats,
}

const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;
const RESTART_UNIT: u64 = 100;

fn luby(mut x: u64) -> u64 {
    // Finite subsequence containing index x, then the element at x.
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

impl CdclSolver {
    pub fn new(n: usize) -> Self {
        CdclSolver {
            n,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            values: vec![Value::Unassigned; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            clause_inc: 1.0,
            order: VarOrder::new(n),
            phase: vec![false; n],
            seen: vec![false; n],
            ok: true,
            learnt_count: 0,
            next_reduce: 4000,
            conflict_limit: None,
            stats: SolverStats::default(),
        }
    }

    pub fn from_formula(formula: &Formula) -> Self {
        let mut s = CdclSolver::new(formula.num_vars());
        for c in formula.clauses() {
            s.add_clause(c.literals());
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// False once the permanent clauses are known to be unsatisfiable.
    pub fn is_consistent(&self) -> bool {
        self.ok
    }

    /// Calls return [`SatResult::Unknown`] once the lifetime conflict count
    /// reaches `limit`.
    pub fn set_conflict_limit(&mut self, limit: Option<u64>) {
        self.conflict_limit = limit;
    }

    /// Preferred polarity for each variable at its next decision.
    pub fn set_phases(&mut self, assignment: &Assignment) {
        self.phase.copy_from_slice(assignment.values());
    }

    /// Value fixed at decision level zero, if any.
    pub fn fixed_value(&self, var: usize) -> Option<bool> {
        match self.values[var] {
            Value::True if self.level[var] == 0 => Some(true),
            Value::False if self.level[var] == 0 => Some(false),
            _ => None,
        }
    }

    #[inline]
    fn lit_value(&self, lit: Literal) -> Value {
        match self.values[lit.var()] {
            Value::Unassigned => Value::Unassigned,
            Value::True => {
                if lit.is_positive() {
                    Value::True
                } else {
                    Value::False
                }
            }
            Value::False => {
                if lit.is_positive() {
                    Value::False
                } else {
                    Value::True
                }
            }
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, lit: Literal, reason: Option<u32>) {
        let v = lit.var();
        debug_assert_eq!(self.values[v], Value::Unassigned);
        self.values[v] = if lit.is_positive() {
            Value::True
        } else {
            Value::False
        };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    /// Adds a permanent clause. Must be called at decision level zero
    /// (always the case between solver calls).
    pub fn add_clause(&mut self, lits: &[Literal]) -> bool {
        debug_assert_eq!(self.decision_level(), 0);
        if !self.ok {
            return false;
        }
        let mut kept: Vec<Literal> = Vec::with_capacity(lits.len());
        for &l in lits {
            debug_assert!(l.var() < self.n);
            match self.lit_value(l) {
                Value::True => return true,
                Value::False => {}
                Value::Unassigned => {
                    if kept.contains(&l.negate()) {
                        return true;
                    }
                    if !kept.contains(&l) {
                        kept.push(l);
                    }
                }
            }
        }
        match kept.len() {
            0 => {
                self.ok = false;
            }
            1 => {
                self.enqueue(kept[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(kept, false, 0);
            }
        }
        self.ok
    }

    fn attach(&mut self, lits: Vec<Literal>, learnt: bool, lbd: u32) -> u32 {
        let idx = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(Watch {
            clause: idx,
            blocker: lits[1],
        });
        self.watches[lits[1].code()].push(Watch {
            clause: idx,
            blocker: lits[0],
        });
        if learnt {
            self.learnt_count += 1;
        }
        self.clauses.push(StoredClause {
            lits,
            learnt,
            deleted: false,
            lbd,
            activity: 0.0,
        });
        idx
    }

    /// Unit propagation; returns a conflicting clause index.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p.negate();
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.lit_value(w.blocker) == Value::True {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let ci = w.clause as usize;
                if self.clauses[ci].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[ci].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[ci].lits[0];
                if first != w.blocker && self.lit_value(first) == Value::True {
                    ws[j] = Watch {
                        clause: w.clause,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let len = self.clauses[ci].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[ci].lits[k];
                    if self.lit_value(l) != Value::False {
                        self.clauses[ci].lits.swap(1, k);
                        self.watches[l.code()].push(Watch {
                            clause: w.clause,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = w;
                j += 1;
                if self.lit_value(first) == Value::False {
                    conflict = Some(w.clause);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.clause));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, ci: usize) {
        let c = &mut self.clauses[ci];
        c.activity += self.clause_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.clause_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis; returns the learned clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut conflict: u32) -> (Vec<Literal>, u32) {
        let mut learnt: Vec<Literal> = vec![Literal::from_code(0)];
        let mut path = 0usize;
        let mut p: Option<Literal> = None;
        let mut idx = self.trail.len();
        let current = self.decision_level();
        let mut to_clear: Vec<usize> = Vec::new();

        loop {
            let ci = conflict as usize;
            if self.clauses[ci].learnt {
                self.bump_clause(ci);
            }
            let start = usize::from(p.is_some());
            let len = self.clauses[ci].lits.len();
            for k in start..len {
                let q = self.clauses[ci].lits[k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    to_clear.push(v);
                    self.bump_var(v);
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var()] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            self.seen[lit.var()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            conflict = self.reason[lit.var()].expect("implied literal has a reason");
        }
        learnt[0] = p.expect("conflict at positive level").negate();

        // Drop literals implied by other literals of the clause.
        let mut kept = 1;
        for i in 1..learnt.len() {
            let q = learnt[i];
            let redundant = match self.reason[q.var()] {
                None => false,
                Some(r) => self.clauses[r as usize].lits[1..]
                    .iter()
                    .all(|l| self.seen[l.var()] || self.level[l.var()] == 0),
            };
            if !redundant {
                learnt[kept] = q;
                kept += 1;
            }
        }
        learnt.truncate(kept);
        for v in to_clear {
            self.seen[v] = false;
        }

        let mut back = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var()] > self.level[learnt[max_i].var()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            back = self.level[learnt[1].var()];
        }
        (learnt, back)
    }

    fn lbd(&mut self, lits: &[Literal]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var()]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let lit = self.trail[i];
            let v = lit.var();
            self.phase[v] = lit.is_positive();
            self.values[v] = Value::Unassigned;
            self.reason[v] = None;
            self.order.push(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn locked(&self, ci: usize) -> bool {
        let c = &self.clauses[ci];
        let v = c.lits[0].var();
        self.reason[v] == Some(ci as u32) && self.lit_value(c.lits[0]) == Value::True
    }

    fn reduce_learnts(&mut self) {
        let mut candidates: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| {
                let c = &self.clauses[i];
                c.learnt && !c.deleted && c.lbd > 2 && c.lits.len() > 2
            })
            .filter(|&i| !self.locked(i))
            .collect();
        candidates.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a], &self.clauses[b]);
            cb.lbd
                .cmp(&ca.lbd)
                .then(ca.activity.partial_cmp(&cb.activity).unwrap())
        });
        for &i in &candidates[..candidates.len() / 2] {
            let c = &mut self.clauses[i];
            c.deleted = true;
            c.lits = Vec::new();
            self.learnt_count -= 1;
        }
        let clauses = &self.clauses;
        for ws in &mut self.watches {
            ws.retain(|w| !clauses[w.clause as usize].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<Literal> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.values[v] == Value::Unassigned {
                self.stats.decisions += 1;
                return Some(Literal::new(v, self.phase[v]));
            }
        }
        None
    }

    fn model(&self) -> Assignment {
        Assignment::from_vec(self.values.iter().map(|&v| v == Value::True).collect())
    }

    pub fn solve(&mut self) -> SatResult {
        self.solve_with(&[])
    }

    /// Decides the permanent clauses together with the `assumptions`.
    pub fn solve_with(&mut self, assumptions: &[Literal]) -> SatResult {
        self.stats.solves += 1;
        if !self.ok {
            return SatResult::Unsat;
        }
        if self.propagate().is_some() {
            self.ok = false;
            return SatResult::Unsat;
        }
        let mut restarts = 0u64;
        let mut budget = luby(restarts) * RESTART_UNIT;
        let mut since_restart = 0u64;
        let result = loop {
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                since_restart += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    break SatResult::Unsat;
                }
                let (learnt, back) = self.analyze(conflict);
                self.cancel_until(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let lbd = self.lbd(&learnt);
                    let asserting = learnt[0];
                    let ci = self.attach(learnt, true, lbd);
                    self.bump_clause(ci as usize);
                    self.enqueue(asserting, Some(ci));
                }
                self.var_inc /= VAR_DECAY;
                self.clause_inc /= CLAUSE_DECAY;
                if self.conflict_limit.is_some_and(|l| self.stats.conflicts >= l) {
                    break SatResult::Unknown;
                }
                continue;
            }
            if since_restart >= budget {
                restarts += 1;
                budget = luby(restarts) * RESTART_UNIT;
                since_restart = 0;
                self.cancel_until(0);
                continue;
            }
            if self.decision_level() == 0 && self.stats.conflicts >= self.next_reduce {
                self.next_reduce = self.stats.conflicts + 4000 + self.learnt_count as u64 / 2;
                self.reduce_learnts();
            }
            let level = self.decision_level() as usize;
            if level < assumptions.len() {
                let a = assumptions[level];
                match self.lit_value(a) {
                    Value::True => {
                        self.trail_lim.push(self.trail.len());
                    }
                    Value::False => break SatResult::Unsat,
                    Value::Unassigned => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(a, None);
                    }
                }
                continue;
            }
            match self.pick_branch() {
                None => break SatResult::Sat(self.model()),
                Some(lit) => {
                    self.trail_lim.push(self.trail.len());
                    self.enqueue(lit, None);
                }
            }
        };
        self.cancel_until(0);
        result
    }
}

/// Complete satisfiability check: iterated pure-literal elimination, then
/// conflict-driven search on what remains. Returns a witness iff `formula`
/// is satisfiable.
pub fn check_satisfiable(formula: &Formula) -> Option<Assignment> {
    let n = formula.num_vars();
    let clauses = formula.clauses();
    let mut alive = vec![true; clauses.len()];
    let mut pure: Vec<Option<bool>> = vec![None; n];
    let occurrences = formula.occurrences();
    let mut counts = vec![0usize; 2 * n];
    for c in clauses {
        for l in c.literals() {
            counts[l.code()] += 1;
        }
    }
    let mut queue: Vec<usize> = (0..n).collect();
    while let Some(v) = queue.pop() {
        if pure[v].is_some() {
            continue;
        }
        let pos = counts[Literal::positive(v).code()];
        let neg = counts[Literal::negative(v).code()];
        let value = match (pos, neg) {
            (0, 0) => continue,
            (_, 0) => true,
            (0, _) => false,
            _ => continue,
        };
        pure[v] = Some(value);
        for &ci in &occurrences[v] {
            let ci = ci as usize;
            if !alive[ci] {
                continue;
            }
            alive[ci] = false;
            for l in clauses[ci].literals() {
                counts[l.code()] -= 1;
                if l.var() != v {
                    queue.push(l.var());
                }
            }
        }
    }
    let mut solver = CdclSolver::new(n);
    for (c, _) in clauses.iter().zip(&alive).filter(|(_, &a)| a) {
        solver.add_clause(c.literals());
    }
    match solver.solve() {
        SatResult::Unsat | SatResult::Unknown => None,
        SatResult::Sat(mut model) => {
            for (v, p) in pure.iter().enumerate() {
                if let Some(value) = p {
                    model.set(v, *value);
                }
            }
            debug_assert!(formula.satisfied_by(&model));
            Some(model)
        }
    }
}
