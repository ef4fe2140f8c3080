//! Random formula processes.
//!
//! The restricted process scans clauses in a uniformly random order and
//! keeps a clause only if the formula stays satisfiable. Variants:
//!
//! * [`Variant::Perm`]: the first `m` clauses of a random permutation of the
//!   clause universe, realised by sampling `m` distinct indices (Floyd) and
//!   shuffling them; every ordered `m`-tuple is equally likely.
//! * [`Variant::Coin`]: every clause is drawn with probability `p`, then the
//!   drawn clauses are scanned in random order.
//! * [`Variant::Unrestricted`]: the same coin stream without the
//!   satisfiability filter.
//! * [`Variant::TwoStep`]: a `p1` round followed by a `p2` round over the
//!   clauses not drawn in the first round.
//! * [`Variant::Planted`]: `m` distinct clauses satisfied by a fixed assignment.

mod rng;
mod sat;
mod trace;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::formula::{binomial, Assignment, Clause, ClauseUniverse, Formula, Literal};

pub use rng::{derive_seed, rng_from_seed, splitmix64, ProcessRng};
pub use sat::{check_satisfiable, CdclSolver, SatResult, SolverStats};
pub use trace::{Decision, GenerationTrace, TraceCounts, TraceEvent};

/// How the set of coin-selected clauses is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CoinMethod {
    /// Permute the whole universe and flip a coin per position. Requires
    /// the universe to be small enough to materialise.
    Stream,
    /// Draw the number of successes `X ~ Binomial(M, p)`, then sample `X`
    /// distinct clauses and shuffle them.
    Binomial,
    /// `Stream` when `M <= STREAM_LIMIT`, otherwise `Binomial`.
    #[default]
    Auto,
}

/// Largest universe for which [`CoinMethod::Auto`] streams.
pub const STREAM_LIMIT: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    Perm { m: u64 },
    Coin { p: f64, method: CoinMethod },
    Unrestricted { p: f64, method: CoinMethod },
    TwoStep { p1: f64, p2: f64, method: CoinMethod, filter: bool },
    /// `assignment: None` draws the planted assignment from the seed.
    Planted { m: u64, assignment: Option<Assignment> },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Perm { .. } => "perm_m",
            Variant::Coin { .. } => "coin_p",
            Variant::Unrestricted { .. } => "unrestricted_p",
            Variant::TwoStep { .. } => "two_step",
            Variant::Planted { .. } => "planted",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessConfig {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub variant: Variant,
    /// Total solver conflicts allowed for acceptance checks; exhausting it
    /// aborts generation with [`Error::Refused`].
    pub conflict_budget: Option<u64>,
}

impl ProcessConfig {
    pub fn with_conflict_budget(mut self, budget: u64) -> Self {
        self.conflict_budget = Some(budget);
        self
    }

    pub fn perm(n: usize, k: usize, m: u64, seed: u64) -> Self {
        ProcessConfig {
            n,
            k,
            seed,
            conflict_budget: None,
            variant: Variant::Perm { m },
        }
    }

    pub fn coin(n: usize, k: usize, p: f64, seed: u64) -> Self {
        ProcessConfig {
            n,
            k,
            seed,
            conflict_budget: None,
            variant: Variant::Coin {
                p,
                method: CoinMethod::Auto,
            },
        }
    }

    pub fn unrestricted(n: usize, k: usize, p: f64, seed: u64) -> Self {
        ProcessConfig {
            n,
            k,
            seed,
            conflict_budget: None,
            variant: Variant::Unrestricted {
                p,
                method: CoinMethod::Auto,
            },
        }
    }

    pub fn two_step(n: usize, k: usize, p1: f64, p2: f64, filter: bool, seed: u64) -> Self {
        ProcessConfig {
            n,
            k,
            seed,
            conflict_budget: None,
            variant: Variant::TwoStep {
                p1,
                p2,
                method: CoinMethod::Auto,
                filter,
            },
        }
    }

    pub fn planted(n: usize, k: usize, m: u64, seed: u64) -> Self {
        ProcessConfig {
            n,
            k,
            seed,
            conflict_budget: None,
            variant: Variant::Planted {
                m,
                assignment: None,
            },
        }
    }

    pub fn validate(&self) -> Result<ClauseUniverse> {
        let universe = ClauseUniverse::new(self.n, self.k)?;
        let probability = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidParameters(format!("{name}={p} outside [0, 1]")))
            }
        };
        match &self.variant {
            Variant::Perm { m } => {
                if *m > universe.size() {
                    return Err(Error::InvalidParameters(format!(
                        "m={m} exceeds the {} available clauses",
                        universe.size()
                    )));
                }
            }
            Variant::Coin { p, .. } | Variant::Unrestricted { p, .. } => probability("p", *p)?,
            Variant::TwoStep { p1, p2, .. } => {
                probability("p1", *p1)?;
                probability("p2", *p2)?;
            }
            Variant::Planted { m, assignment } => {
                let available = planted_universe_size(self.n, self.k)?;
                if *m > available {
                    return Err(Error::InvalidParameters(format!(
                        "m={m} exceeds the {available} clauses satisfied by the planted assignment"
                    )));
                }
                if assignment.as_ref().is_some_and(|a| a.len() != self.n) {
                    return Err(Error::InvalidParameters(
                        "planted assignment length differs from n".into(),
                    ));
                }
            }
        }
        Ok(universe)
    }
}

fn resolve(method: CoinMethod, universe: u64) -> CoinMethod {
    match method {
        CoinMethod::Auto if universe <= STREAM_LIMIT => CoinMethod::Stream,
        CoinMethod::Auto => CoinMethod::Binomial,
        other => other,
    }
}

/// `count` distinct values from `[0, universe)` (Floyd), in uniformly random order.
pub fn sample_distinct(rng: &mut ProcessRng, universe: u64, count: u64) -> Vec<u64> {
    assert!(count <= universe);
    let mut chosen: HashSet<u64> = HashSet::with_capacity(count as usize);
    let mut order: Vec<u64> = Vec::with_capacity(count as usize);
    for j in universe - count..universe {
        let t = rng.random_range(0..=j);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        order.push(pick);
    }
    order.shuffle(rng);
    order
}

/// Coin-flip selection over `[0, universe)` minus `excluded` (sorted).
/// Returns `(index, drawn)` pairs in scan order; in binomial mode only the
/// drawn indices are listed.
fn coin_selection(
    rng: &mut ProcessRng,
    universe: u64,
    excluded: &[u64],
    p: f64,
    method: CoinMethod,
) -> Result<Vec<(u64, bool)>> {
    let available = universe - excluded.len() as u64;
    match resolve(method, universe) {
        CoinMethod::Stream => {
            if universe > (1 << 28) {
                return Err(Error::Refused(format!(
                    "stream sampling over {universe} clauses"
                )));
            }
            let mut order: Vec<u64> = (0..universe)
                .filter(|i| excluded.binary_search(i).is_err())
                .collect();
            order.shuffle(rng);
            Ok(order
                .into_iter()
                .map(|i| (i, rng.random_bool(p)))
                .collect())
        }
        _ => {
            let count = if available == 0 || p == 0.0 {
                0
            } else {
                Binomial::new(available, p)
                    .map_err(|e| Error::InvalidParameters(e.to_string()))?
                    .sample(rng)
            };
            Ok(sample_distinct(rng, available, count)
                .into_iter()
                .map(|r| (complement_index(excluded, r), true))
                .collect())
        }
    }
}

/// The `rank`-th value (0-based) of the complement of sorted `excluded`.
fn complement_index(excluded: &[u64], rank: u64) -> u64 {
    // s_i - i counts the complement values below s_i; it is non-decreasing in i.
    let (mut lo, mut hi) = (0usize, excluded.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if excluded[mid] - mid as u64 <= rank {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    rank + lo as u64
}

/// Incremental builder enforcing the acceptance rule.
///
/// Keeps a witness of the formula built so far. A candidate satisfied by
/// the witness is accepted immediately; otherwise the formula is checked
/// for a model making each literal of the candidate true. A failed check
/// proves the negated literal, which is recorded as a permanent unit.
pub struct RestrictedBuilder {
    formula: Formula,
    solver: CdclSolver,
    witness: Assignment,
    searches: u64,
    budget: Option<u64>,
}

impl RestrictedBuilder {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Ok(RestrictedBuilder {
            formula: Formula::new(n, k)?,
            solver: CdclSolver::new(n),
            witness: Assignment::all(n, false),
            searches: 0,
            budget: None,
        })
    }

    /// Caps the total number of solver conflicts spent across all offers.
    pub fn with_conflict_budget(mut self, budget: Option<u64>) -> Self {
        self.budget = budget;
        self.solver.set_conflict_limit(budget);
        self
    }

    /// Accepts `clause` iff the formula plus `clause` is satisfiable.
    pub fn offer(&mut self, clause: Clause) -> Result<Decision> {
        if self.formula.contains(&clause) {
            return Err(Error::DuplicateClause(format!("{clause:?}")));
        }
        if clause.evaluate(&self.witness) {
            self.solver.add_clause(clause.literals());
            self.formula.push(clause)?;
            return Ok(Decision::Accepted);
        }
        for &lit in clause.literals() {
            self.searches += 1;
            self.solver.set_phases(&self.witness);
            match self.solver.solve_with(&[lit]) {
                SatResult::Sat(model) => {
                    self.witness = model;
                    self.solver.add_clause(clause.literals());
                    self.formula.push(clause)?;
                    return Ok(Decision::Accepted);
                }
                SatResult::Unsat => {
                    self.solver.add_clause(&[lit.negate()]);
                }
                SatResult::Unknown => {
                    return Err(Error::Refused(format!(
                        "conflict budget of {} exhausted after {} accepted clauses",
                        self.budget.unwrap_or(0),
                        self.formula.len()
                    )));
                }
            }
        }
        debug_assert!(self.solver.is_consistent());
        Ok(Decision::Rejected)
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn witness(&self) -> &Assignment {
        &self.witness
    }

    /// Number of complete searches performed (witness misses).
    pub fn searches(&self) -> u64 {
        self.searches
    }

    /// Value of `var` forced in every model, when already derived.
    pub fn known_fixed(&self, var: usize) -> Option<bool> {
        self.solver.fixed_value(var)
    }

    pub fn into_parts(self) -> (Formula, Assignment) {
        (self.formula, self.witness)
    }
}

/// Scans `clauses` in order through the acceptance rule.
pub fn restricted_filter(
    n: usize,
    k: usize,
    clauses: impl IntoIterator<Item = Clause>,
    variant: &'static str,
    seed: u64,
) -> Result<(Formula, GenerationTrace)> {
    filter_with_budget(n, k, clauses, variant, seed, None)
}

fn filter_with_budget(
    n: usize,
    k: usize,
    clauses: impl IntoIterator<Item = Clause>,
    variant: &'static str,
    seed: u64,
    budget: Option<u64>,
) -> Result<(Formula, GenerationTrace)> {
    let mut builder = RestrictedBuilder::new(n, k)?.with_conflict_budget(budget);
    let mut trace = GenerationTrace::new(variant, seed);
    for c in clauses {
        let decision = builder.offer(c.clone())?;
        trace.record(c, decision);
    }
    let (formula, witness) = builder.into_parts();
    debug_assert!(formula.satisfied_by(&witness));
    trace.witness = Some(witness);
    Ok((formula, trace))
}

fn clauses_at(universe: &ClauseUniverse, indices: &[u64]) -> Result<Vec<Clause>> {
    indices.iter().map(|&i| universe.clause_at(i)).collect()
}

/// First `m` clauses of a uniformly random permutation, scanned through the
/// acceptance rule.
pub fn generate_perm_process(config: &ProcessConfig) -> Result<(Formula, GenerationTrace)> {
    let universe = config.validate()?;
    let Variant::Perm { m } = config.variant else {
        return Err(Error::InvalidParameters("expected the perm_m variant".into()));
    };
    let mut rng = rng_from_seed(config.seed);
    let order = sample_distinct(&mut rng, universe.size(), m);
    let clauses = clauses_at(&universe, &order)?;
    filter_with_budget(config.n, config.k, clauses, "perm_m", config.seed, config.conflict_budget)
}

/// Coin-flip restricted process. In stream mode the trace also lists the
/// clauses whose coin failed.
pub fn generate_coin_process(config: &ProcessConfig) -> Result<(Formula, GenerationTrace)> {
    let universe = config.validate()?;
    let Variant::Coin { p, method } = config.variant else {
        return Err(Error::InvalidParameters("expected the coin_p variant".into()));
    };
    let mut rng = rng_from_seed(config.seed);
    let selection = coin_selection(&mut rng, universe.size(), &[], p, method)?;
    let mut builder = RestrictedBuilder::new(config.n, config.k)?.with_conflict_budget(config.conflict_budget);
    let mut trace = GenerationTrace::new("coin_p", config.seed);
    for (idx, drawn) in selection {
        let clause = universe.clause_at(idx)?;
        let decision = if drawn {
            builder.offer(clause.clone())?
        } else {
            Decision::NotDrawn
        };
        trace.record(clause, decision);
    }
    let (formula, witness) = builder.into_parts();
    trace.witness = Some(witness);
    Ok((formula, trace))
}

/// The drawn clause sequence of the coin process, without filtering.
pub fn generate_unrestricted(config: &ProcessConfig) -> Result<Formula> {
    let universe = config.validate()?;
    let (p, method) = match config.variant {
        Variant::Unrestricted { p, method } | Variant::Coin { p, method } => (p, method),
        _ => {
            return Err(Error::InvalidParameters(
                "expected the unrestricted_p variant".into(),
            ))
        }
    };
    let mut rng = rng_from_seed(config.seed);
    let selection = coin_selection(&mut rng, universe.size(), &[], p, method)?;
    let drawn: Vec<u64> = selection
        .into_iter()
        .filter_map(|(i, d)| d.then_some(i))
        .collect();
    Formula::from_clauses(config.n, config.k, clauses_at(&universe, &drawn)?)
}

/// Output of the two-round process.
#[derive(Clone, Debug)]
pub struct TwoStepOutput {
    /// Clauses drawn in the first round, in scan order.
    pub first: Formula,
    /// Clauses drawn in the second round, in scan order.
    pub second: Formula,
    /// `p1 + p2 - p1 * p2`.
    pub derived_p: f64,
    /// The concatenation scanned through the acceptance rule, when requested.
    pub filtered: Option<(Formula, GenerationTrace)>,
}

impl TwoStepOutput {
    /// Both rounds in order.
    pub fn concatenated(&self) -> impl Iterator<Item = &Clause> {
        self.first.clauses().iter().chain(self.second.clauses())
    }
}

pub fn generate_two_step(config: &ProcessConfig) -> Result<TwoStepOutput> {
    let universe = config.validate()?;
    let Variant::TwoStep {
        p1,
        p2,
        method,
        filter,
    } = config.variant
    else {
        return Err(Error::InvalidParameters("expected the two_step variant".into()));
    };
    let mut rng = rng_from_seed(config.seed);
    let round = |rng: &mut ProcessRng, excluded: &[u64], p: f64| -> Result<Vec<u64>> {
        let mut drawn: Vec<u64> = match resolve(method, universe.size()) {
            CoinMethod::Stream => (0..universe.size())
                .filter(|i| excluded.binary_search(i).is_err())
                .filter(|_| rng.random_bool(p))
                .collect(),
            _ => coin_selection(rng, universe.size(), excluded, p, CoinMethod::Binomial)?
                .into_iter()
                .map(|(i, _)| i)
                .collect(),
        };
        drawn.shuffle(rng);
        Ok(drawn)
    };
    let first_idx = round(&mut rng, &[], p1)?;
    let mut excluded = first_idx.clone();
    excluded.sort_unstable();
    let second_idx = round(&mut rng, &excluded, p2)?;

    let first = Formula::from_clauses(config.n, config.k, clauses_at(&universe, &first_idx)?)?;
    let second = Formula::from_clauses(config.n, config.k, clauses_at(&universe, &second_idx)?)?;
    let derived_p = p1 + p2 - p1 * p2;
    let filtered = if filter {
        let all = first.clauses().iter().chain(second.clauses()).cloned();
        let (f, mut trace) =
            filter_with_budget(config.n, config.k, all, "two_step", config.seed, config.conflict_budget)?;
        trace.derived_p = Some(derived_p);
        Some((f, trace))
    } else {
        None
    };
    Ok(TwoStepOutput {
        first,
        second,
        derived_p,
        filtered,
    })
}

/// `(2^k - 1) * C(n, k)`: clauses satisfied by any fixed assignment.
pub fn planted_universe_size(n: usize, k: usize) -> Result<u64> {
    crate::formula::clause_universe_size(n, k)?;
    let c = binomial(n as u64, k as u64).expect("checked above");
    Ok(c * ((1u64 << k) - 1))
}

/// `m` distinct clauses drawn uniformly from those satisfied by `planted`,
/// in random order.
pub fn generate_planted(n: usize, k: usize, m: u64, planted: &Assignment, seed: u64) -> Result<Formula> {
    let mut rng = rng_from_seed(seed);
    planted_with_rng(n, k, m, planted, &mut rng)
}

fn planted_with_rng(
    n: usize,
    k: usize,
    m: u64,
    planted: &Assignment,
    rng: &mut ProcessRng,
) -> Result<Formula> {
    let available = planted_universe_size(n, k)?;
    if m > available {
        return Err(Error::InvalidParameters(format!(
            "m={m} exceeds the {available} clauses satisfied by the planted assignment"
        )));
    }
    if planted.len() != n {
        return Err(Error::InvalidParameters(
            "planted assignment length differs from n".into(),
        ));
    }
    let universe = ClauseUniverse::new(n, k)?;
    let patterns = (1u64 << k) - 1;
    let mut formula = Formula::new(n, k)?;
    for j in sample_distinct(rng, available, m) {
        let vars = universe.combination_at(j / patterns)?;
        let r = j % patterns;
        let falsified = universe.sign_mask_falsified_by(vars.iter().map(|&v| planted.get(v)));
        let signs = if r < falsified { r } else { r + 1 };
        let lits = vars
            .iter()
            .enumerate()
            .map(|(i, &v)| Literal::new(v, signs >> i & 1 == 0));
        formula.push(Clause::new(lits)?)?;
    }
    Ok(formula)
}

/// Runs any variant, producing a formula and a trace. For the unrestricted
/// and unfiltered two-round variants every drawn clause is recorded as
/// accepted and no witness is given.
pub fn generate(config: &ProcessConfig) -> Result<(Formula, GenerationTrace)> {
    match &config.variant {
        Variant::Perm { .. } => generate_perm_process(config),
        Variant::Coin { .. } => generate_coin_process(config),
        Variant::Unrestricted { .. } => {
            let f = generate_unrestricted(config)?;
            let mut trace = GenerationTrace::new("unrestricted_p", config.seed);
            for c in f.clauses() {
                trace.record(c.clone(), Decision::Accepted);
            }
            Ok((f, trace))
        }
        Variant::TwoStep { .. } => {
            let out = generate_two_step(config)?;
            if let Some(filtered) = out.filtered {
                return Ok(filtered);
            }
            let mut f = Formula::new(config.n, config.k)?;
            let mut trace = GenerationTrace::new("two_step", config.seed);
            trace.derived_p = Some(out.derived_p);
            for c in out.first.clauses().iter().chain(out.second.clauses()) {
                f.push(c.clone())?;
                trace.record(c.clone(), Decision::Accepted);
            }
            Ok((f, trace))
        }
        Variant::Planted { m, assignment } => {
            config.validate()?;
            let mut rng = rng_from_seed(config.seed);
            let planted = match assignment {
                Some(a) => a.clone(),
                None => Assignment::from_vec((0..config.n).map(|_| rng.random_bool(0.5)).collect()),
            };
            let f = planted_with_rng(config.n, config.k, *m, &planted, &mut rng)?;
            let mut trace = GenerationTrace::new("planted", config.seed);
            for c in f.clauses() {
                trace.record(c.clone(), Decision::Accepted);
            }
            trace.witness = Some(planted);
            Ok((f, trace))
        }
    }
}
