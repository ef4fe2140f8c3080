//! Exact solution-space analysis for small formulas.
//!
//! Assignments over at most 64 variables are handled as bit masks, bit `i`
//! holding the value of variable `i`. Enumeration order is lexicographic in
//! `(x_0, x_1, ...)` with FALSE before TRUE.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formula::{Assignment, Formula};

/// Largest `n` the oracle enumerates by default.
pub const DEFAULT_ORACLE_LIMIT: usize = 26;

/// Largest subset size searched exhaustively for proportionality.
pub const DEFAULT_EXHAUSTIVE_SIZE: usize = 14;

/// Work cap (subsets visited times clauses) for the exhaustive search.
const EXHAUSTIVE_WORK: u128 = 400_000_000;

struct MaskClause {
    pos: u64,
    neg: u64,
}

impl MaskClause {
    #[inline]
    fn satisfied(&self, a: u64) -> bool {
        (a & self.pos) | (!a & self.neg) != 0
    }
}

/// Clauses bucketed by their largest variable.
fn mask_buckets(formula: &Formula) -> Vec<Vec<MaskClause>> {
    let mut buckets: Vec<Vec<MaskClause>> = (0..formula.num_vars()).map(|_| Vec::new()).collect();
    for c in formula.clauses() {
        let mut mc = MaskClause { pos: 0, neg: 0 };
        for l in c.literals() {
            if l.is_positive() {
                mc.pos |= 1 << l.var();
            } else {
                mc.neg |= 1 << l.var();
            }
        }
        buckets[c.max_var()].push(mc);
    }
    buckets
}

fn check_limit(formula: &Formula, limit: usize) -> Result<()> {
    let n = formula.num_vars();
    if n > limit || n > 64 {
        return Err(Error::Refused(format!(
            "exact enumeration over n={n} variables exceeds the oracle limit {}",
            limit.min(64)
        )));
    }
    Ok(())
}

/// All satisfying assignments as masks, in lexicographic order.
pub fn solution_masks(formula: &Formula, limit: usize) -> Result<Vec<u64>> {
    check_limit(formula, limit)?;
    let n = formula.num_vars();
    let buckets = mask_buckets(formula);
    let mut out = Vec::new();
    if n == 0 {
        out.push(0);
        return Ok(out);
    }
    // Depth-first with an explicit stack of (depth, partial mask).
    let mut stack: Vec<(usize, u64)> = vec![(0, 1), (0, 0)];
    while let Some((depth, mask)) = stack.pop() {
        if !buckets[depth].iter().all(|c| c.satisfied(mask)) {
            continue;
        }
        if depth + 1 == n {
            out.push(mask);
        } else {
            let next = depth + 1;
            stack.push((next, mask | 1 << next));
            stack.push((next, mask));
        }
    }
    Ok(out)
}

/// All satisfying assignments, lexicographically ordered, with the default limit.
pub fn enumerate_solutions(formula: &Formula) -> Result<Vec<Assignment>> {
    enumerate_solutions_with_limit(formula, DEFAULT_ORACLE_LIMIT)
}

pub fn enumerate_solutions_with_limit(formula: &Formula, limit: usize) -> Result<Vec<Assignment>> {
    let n = formula.num_vars();
    Ok(solution_masks(formula, limit)?
        .into_iter()
        .map(|m| Assignment::from_mask(n, m))
        .collect())
}

/// Number of satisfying assignments.
pub fn count_solutions(formula: &Formula, limit: usize) -> Result<u64> {
    Ok(solution_masks(formula, limit)?.len() as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionSpaceSummary {
    pub n: usize,
    pub beta: u64,
    /// Variables constant across all solutions with their value; empty when unsatisfiable.
    pub frozen: Vec<(usize, bool)>,
    /// Largest pairwise Hamming distance between solutions.
    #[serde(rename = "radius")]
    pub concentration_radius: usize,
    /// `log2(beta) / n`, absent when `beta = 0`.
    pub entropy: Option<f64>,
    /// Solutions grouped by Hamming-distance linking, largest group first.
    #[serde(serialize_with = "cluster_sizes")]
    pub clusters: Vec<Vec<u64>>,
    pub link_distance: usize,
}

fn cluster_sizes<S: serde::Serializer>(clusters: &[Vec<u64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(clusters.iter().map(Vec::len))
}

impl SolutionSpaceSummary {
    pub fn frozen_fraction(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        self.frozen.len() as f64 / self.n as f64
    }

    pub fn is_frozen(&self, var: usize) -> Option<bool> {
        self.frozen.iter().find(|(v, _)| *v == var).map(|&(_, b)| b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("summary serializes")
    }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

fn flip_masks(n: usize, max_weight: usize) -> Vec<u64> {
    let mut out = Vec::new();
    fn rec(n: usize, start: usize, left: usize, acc: u64, out: &mut Vec<u64>) {
        if acc != 0 {
            out.push(acc);
        }
        if left == 0 {
            return;
        }
        for i in start..n {
            rec(n, i + 1, left - 1, acc | 1 << i, out);
        }
    }
    rec(n, 0, max_weight, 0, &mut out);
    out
}

fn clusters_of(solutions: &[u64], n: usize, link: usize) -> Vec<Vec<u64>> {
    let beta = solutions.len();
    let mut dsu = Dsu((0..beta).collect());
    if link > 0 && beta > 1 {
        let flips: u128 = (1..=link.min(n))
            .map(|j| crate::formula::binomial(n as u64, j as u64).unwrap_or(u64::MAX) as u128)
            .sum();
        if flips * (beta as u128) < (beta as u128) * (beta as u128) / 2 {
            let index: HashMap<u64, usize> = solutions.iter().enumerate().map(|(i, &s)| (s, i)).collect();
            let masks = flip_masks(n, link);
            for (i, &s) in solutions.iter().enumerate() {
                for &f in &masks {
                    if let Some(&j) = index.get(&(s ^ f)) {
                        dsu.union(i, j);
                    }
                }
            }
        } else {
            for i in 0..beta {
                for j in i + 1..beta {
                    if ((solutions[i] ^ solutions[j]).count_ones() as usize) <= link {
                        dsu.union(i, j);
                    }
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<u64>> = HashMap::new();
    for (i, &s) in solutions.iter().enumerate() {
        let root = dsu.find(i);
        groups.entry(root).or_default().push(s);
    }
    let mut clusters: Vec<(usize, Vec<u64>)> = groups.into_iter().collect();
    // Roots are the lowest index in their group, i.e. the lexicographically first member.
    clusters.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
    clusters.into_iter().map(|(_, c)| c).collect()
}

/// Summary of the solution space, linking solutions at Hamming distance at
/// most `link_distance` into clusters.
pub fn summarize_solution_space(formula: &Formula, link_distance: usize) -> Result<SolutionSpaceSummary> {
    summarize_with_limit(formula, link_distance, DEFAULT_ORACLE_LIMIT)
}

pub fn summarize_with_limit(
    formula: &Formula,
    link_distance: usize,
    limit: usize,
) -> Result<SolutionSpaceSummary> {
    let n = formula.num_vars();
    let solutions = solution_masks(formula, limit)?;
    Ok(summarize_masks(n, &solutions, link_distance))
}

/// Summary from an already enumerated solution list.
pub fn summarize_masks(n: usize, solutions: &[u64], link_distance: usize) -> SolutionSpaceSummary {
    let beta = solutions.len() as u64;
    if solutions.is_empty() {
        return SolutionSpaceSummary {
            n,
            beta: 0,
            frozen: Vec::new(),
            concentration_radius: 0,
            entropy: None,
            clusters: Vec::new(),
            link_distance,
        };
    }
    let all_mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let (and, or) = solutions
        .iter()
        .fold((all_mask, 0u64), |(a, o), &s| (a & s, o | s));
    let frozen: Vec<(usize, bool)> = (0..n)
        .filter(|&v| (and >> v & 1) == (or >> v & 1))
        .map(|v| (v, and >> v & 1 == 1))
        .collect();

    let bound = n - frozen.len();
    let mut radius = 0usize;
    'outer: for (i, &a) in solutions.iter().enumerate() {
        for &b in &solutions[i + 1..] {
            radius = radius.max((a ^ b).count_ones() as usize);
            if radius == bound {
                break 'outer;
            }
        }
    }

    let entropy = if n == 0 {
        Some(0.0)
    } else {
        Some((beta as f64).log2() / n as f64)
    };
    SolutionSpaceSummary {
        n,
        beta,
        frozen,
        concentration_radius: radius,
        entropy,
        clusters: clusters_of(solutions, n, link_distance),
        link_distance,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub vars: Vec<usize>,
    /// Clauses containing at least two variables of `vars`.
    pub clause_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProportionalityReport {
    pub rho: f64,
    pub size_cap: usize,
    pub violating_set: Option<Violation>,
    /// Whether every set of size at most `size_cap` was examined.
    pub exhaustive: bool,
}

impl ProportionalityReport {
    pub fn is_proportional(&self) -> bool {
        self.violating_set.is_none()
    }
}

/// Clauses of `formula` containing at least two of `vars`.
pub fn dense_clause_count(formula: &Formula, vars: &[usize]) -> usize {
    formula
        .clauses()
        .iter()
        .filter(|c| c.vars().filter(|v| vars.contains(v)).count() >= 2)
        .count()
}

fn violates(count: usize, size: usize, rho: f64) -> bool {
    count as f64 >= rho * size as f64
}

/// Searches for a set `U` with `|U| <= size_cap` and at least `rho * |U|`
/// clauses that each contain two or more variables of `U`.
///
/// Sets up to [`DEFAULT_EXHAUSTIVE_SIZE`] are enumerated when the work fits
/// a fixed budget; larger sizes get a greedy growth heuristic which only
/// reports violations it can certify.
pub fn check_proportional(formula: &Formula, rho: f64, size_cap: usize) -> Result<ProportionalityReport> {
    check_proportional_with(formula, rho, size_cap, DEFAULT_EXHAUSTIVE_SIZE)
}

pub fn check_proportional_with(
    formula: &Formula,
    rho: f64,
    size_cap: usize,
    exhaustive_size: usize,
) -> Result<ProportionalityReport> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::InvalidParameters(format!("rho={rho} must be positive")));
    }
    let n = formula.num_vars();
    let size_cap = size_cap.min(n);
    let mut exhaustive_upto = size_cap.min(exhaustive_size);
    if n > 64 {
        exhaustive_upto = 0;
    }
    let m = formula.len().max(1) as u128;
    while exhaustive_upto >= 2 {
        let subsets: u128 = (2..=exhaustive_upto)
            .map(|j| crate::formula::binomial(n as u64, j as u64).unwrap_or(u64::MAX) as u128)
            .sum();
        if subsets * m <= EXHAUSTIVE_WORK {
            break;
        }
        exhaustive_upto -= 1;
    }

    let mut report = ProportionalityReport {
        rho,
        size_cap,
        violating_set: None,
        exhaustive: exhaustive_upto >= size_cap || size_cap < 2,
    };
    if exhaustive_upto >= 2 {
        report.violating_set = exhaustive_search(formula, rho, exhaustive_upto);
    }
    if report.violating_set.is_none() && !report.exhaustive {
        report.violating_set = greedy_search(formula, rho, size_cap);
    }
    if let Some(v) = &report.violating_set {
        let count = dense_clause_count(formula, &v.vars);
        assert!(count == v.clause_count && violates(count, v.vars.len(), rho));
    }
    Ok(report)
}

fn exhaustive_search(formula: &Formula, rho: f64, max_size: usize) -> Option<Violation> {
    let n = formula.num_vars();
    let masks: Vec<u64> = formula
        .clauses()
        .iter()
        .map(|c| c.vars().fold(0u64, |m, v| m | 1 << v))
        .collect();
    for size in 2..=max_size {
        // Gosper's hack over size-element subsets of [0, n).
        let mut set: u64 = (1u64 << size) - 1;
        let limit_bit = if n == 64 { None } else { Some(1u64 << n) };
        loop {
            let count = masks
                .iter()
                .filter(|&&c| {
                    let x = c & set;
                    x & x.wrapping_sub(1) != 0
                })
                .count();
            if violates(count, size, rho) {
                return Some(Violation {
                    vars: (0..n).filter(|&v| set >> v & 1 == 1).collect(),
                    clause_count: count,
                });
            }
            let c = set & set.wrapping_neg();
            let r = set.wrapping_add(c);
            if r == 0 {
                break;
            }
            set = (((r ^ set) >> 2) / c) | r;
            if limit_bit.is_some_and(|b| set >= b) {
                break;
            }
        }
    }
    None
}

fn greedy_search(formula: &Formula, rho: f64, size_cap: usize) -> Option<Violation> {
    let n = formula.num_vars();
    let occ = formula.occurrences();
    let clauses = formula.clauses();
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by(|&a, &b| occ[b].len().cmp(&occ[a].len()).then(a.cmp(&b)));
    seeds.truncate(64);

    for seed in seeds {
        let mut in_set = vec![false; n];
        let mut hits = vec![0u8; clauses.len()];
        let mut members = vec![seed];
        in_set[seed] = true;
        for &ci in &occ[seed] {
            hits[ci as usize] += 1;
        }
        let mut count = 0usize;
        while members.len() < size_cap {
            // Candidates share a clause with the current set.
            let mut best: Option<(usize, usize)> = None;
            for &mv in &members {
                for &ci in &occ[mv] {
                    for y in clauses[ci as usize].vars() {
                        if in_set[y] {
                            continue;
                        }
                        let gain = occ[y].iter().filter(|&&cj| hits[cj as usize] == 1).count();
                        if best.is_none_or(|(g, v)| gain > g || (gain == g && y < v)) {
                            best = Some((gain, y));
                        }
                    }
                }
            }
            let Some((gain, y)) = best else { break };
            in_set[y] = true;
            members.push(y);
            count += gain;
            for &ci in &occ[y] {
                hits[ci as usize] += 1;
            }
            if violates(count, members.len(), rho) {
                let mut vars = members.clone();
                vars.sort_unstable();
                return Some(Violation {
                    vars,
                    clause_count: count,
                });
            }
        }
    }
    None
}
