use rand::seq::SliceRandom;
use rand::Rng;

use super::*;
use crate::corebuilder::RemovalOrder;
use crate::formula::{support_count_partial, Clause, ClauseUniverse, PartialAssignment, ResidualFormula};
use crate::generator::{generate_planted, rng_from_seed};

fn dimacs(n: usize, k: usize, clauses: &[&[i64]]) -> Formula {
    Formula::from_dimacs_clauses(n, k, clauses).unwrap()
}

fn residual(n: usize, clauses: &[&[i64]]) -> ResidualFormula {
    ResidualFormula::new(n, clauses.iter().map(|c| Clause::from_dimacs(c).unwrap()).collect())
}

#[test]
fn log_and_sweep_defaults() {
    assert_eq!(ceil_log2(1), 1);
    assert_eq!(ceil_log2(2), 1);
    assert_eq!(ceil_log2(3), 2);
    assert_eq!(ceil_log2(1000), 10);
    assert_eq!(ceil_log2(1024), 10);
    assert_eq!(ceil_log2(2000), 11);
    assert_eq!(default_t_sweep(1000, 60_000), vec![3, 6, 12, 24]);
    assert_eq!(default_t_sweep(10, 5), vec![1]);
    let c = SolverConfig::new(1000, 5);
    assert_eq!(c.reassign_iters, 10);
    assert_eq!(c.component_cap, 30);
}

#[test]
fn majority_examples() {
    let f = dimacs(3, 3, &[&[1, 2, 3], &[1, -2, 3]]);
    assert_eq!(majority_vote(&f), Assignment::from_vec(vec![true, false, true]));
    assert_eq!(majority_vote(&Formula::new(4, 3).unwrap()), Assignment::all(4, false));
}

#[test]
fn majority_recovers_planted_assignment() {
    let mut rng = rng_from_seed(8);
    let n = 1000;
    let psi = Assignment::from_vec((0..n).map(|_| rng.random_bool(0.5)).collect());
    let f = generate_planted(n, 3, 60 * n as u64, &psi, 3).unwrap();
    let agree = n - majority_vote(&f).hamming(&psi);
    assert!(agree as f64 >= 0.9 * n as f64, "{agree}");
}

#[test]
fn reassignment_fixpoint_and_flip() {
    // Under all-TRUE every variable supports exactly its own clause.
    let f = dimacs(3, 3, &[&[1, -2, -3], &[-1, 2, -3], &[-1, -2, 3]]);
    let mut c = SolverConfig::new(3, 1);
    let (out, flips) = reassignment_rounds(&f, &Assignment::all(3, true), &c);
    assert_eq!(out, Assignment::all(3, true));
    assert_eq!(flips, vec![0]);

    // t = 3: the flip threshold is 2 and nobody reaches it.
    c.t = 3;
    c.reassign_iters = 1;
    let f = dimacs(4, 3, &[&[1, 2, 3]]);
    let (out, flips) = reassignment_rounds(&f, &Assignment::all(4, false), &c);
    assert_eq!(flips, vec![4]);
    assert_eq!(out, Assignment::all(4, true));
    // A second round flips everything back: the clause has three true literals.
    c.reassign_iters = 2;
    let (out, flips) = reassignment_rounds(&f, &Assignment::all(4, false), &c);
    assert_eq!(flips, vec![4, 4]);
    assert_eq!(out, Assignment::all(4, false));
}

#[test]
fn batch_rounds_ignore_scan_order() {
    // Batch semantics: a round equals flipping the set computed from the
    // round-start snapshot, however that set is scanned.
    for seed in 0..50 {
        let mut rng = rng_from_seed(seed);
        let n = 30;
        let psi = Assignment::from_vec((0..n).map(|_| rng.random_bool(0.5)).collect());
        let f = generate_planted(n, 3, 200, &psi, seed).unwrap();
        let start = Assignment::from_vec((0..n).map(|_| rng.random_bool(0.5)).collect());
        let mut c = SolverConfig::new(n, 2);
        c.reassign_iters = 1;
        let (once, _) = reassignment_rounds(&f, &start, &c);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut manual = start.clone();
        for &v in &order {
            let s = crate::formula::support_count(&f, &start, v, None).unwrap();
            if c.reassign_flip_factor.below(s, c.t) {
                manual.flip(v);
            }
        }
        assert_eq!(once, manual);
    }
}

#[test]
fn sequential_mode_differs_only_in_schedule() {
    let f = dimacs(4, 3, &[&[1, 2, 3]]);
    let mut c = SolverConfig::new(4, 3);
    c.flip_mode = FlipMode::Sequential;
    let (_, flips) = reassignment_rounds(&f, &Assignment::all(4, false), &c);
    assert_eq!(flips[0], 4);
}

#[test]
fn unassignment_examples() {
    let f = dimacs(3, 3, &[&[1, -2, -3], &[-1, 2, -3], &[-1, -2, 3]]);
    let c = SolverConfig::new(3, 1);
    let p = unassignment(&f, &Assignment::all(3, true), &c);
    // Unassigning nobody: each variable supports one clause.
    assert_eq!(p.assigned_count(), 3);

    let empty = Formula::new(5, 3).unwrap();
    let p = unassignment(&empty, &Assignment::all(5, true), &c);
    assert_eq!(p.assigned_count(), 0);
}

#[test]
fn unassignment_cascades() {
    // Under all-TRUE, x1 supports nothing and x2 supports only the first
    // clause, whose co-literal -x1 stops counting once x1 is unassigned.
    // x3, x4, x5 support each other.
    let f = dimacs(
        5,
        3,
        &[&[2, -1, -3], &[3, -4, -5], &[4, -3, -5], &[5, -3, -4]],
    );
    let psi = Assignment::all(5, true);
    let c = SolverConfig::new(5, 1);
    let p = unassignment(&f, &psi, &c);
    assert_eq!(p.get(0), None);
    assert_eq!(p.get(1), None);
    for v in 2..5 {
        assert_eq!(p.get(v), Some(true));
    }
    // Before the cascade x2 did have support 1.
    assert_eq!(support_count_partial(&f, &psi.to_partial(), 1).unwrap(), 1);
}

#[test]
fn unassignment_fixpoint_is_order_independent() {
    for seed in 0..200 {
        let mut rng = rng_from_seed(seed + 1000);
        let n = 15 + (seed as usize % 20);
        let psi = Assignment::from_vec((0..n).map(|_| rng.random_bool(0.5)).collect());
        let f = generate_planted(n, 3, rng.random_range(n as u64..10 * n as u64), &psi, seed).unwrap();
        let c = SolverConfig::new(n, 1 + seed % 3);
        let low = unassignment_with_order(&f, &psi, &c, RemovalOrder::LowestIndexFirst);
        let high = unassignment_with_order(&f, &psi, &c, RemovalOrder::HighestIndexFirst);
        assert_eq!(low, high);
        for v in 0..n {
            if low.is_assigned(v) {
                let s = support_count_partial(&f, &low, v).unwrap();
                assert!(!c.unassign_factor.below(s, c.t));
            }
        }
    }
}

#[test]
fn propagation_examples() {
    let xi = PartialAssignment::unassigned(5);
    let p = unit_propagation(&residual(5, &[&[4]]), &xi).unwrap();
    assert_eq!(p.assignment.get(3), Some(true));
    assert_eq!(p.rounds, 1);

    assert!(matches!(
        unit_propagation(&residual(5, &[&[4], &[-4]]), &xi),
        Err(crate::Error::Conflict { .. })
    ));

    let p = unit_propagation(&residual(5, &[&[4], &[-4, 5]]), &xi).unwrap();
    assert_eq!(p.assignment.get(3), Some(true));
    assert_eq!(p.assignment.get(4), Some(true));
    assert_eq!(p.rounds, 2);
    assert_eq!(p.levels[3], Some(1));
    assert_eq!(p.levels[4], Some(2));
    assert!(p.residual.is_empty());

    let p = unit_propagation(&residual(5, &[&[1, 2], &[-4, 5]]), &xi).unwrap();
    assert_eq!(p.rounds, 0);
    assert_eq!(p.residual.len(), 2);
}

#[test]
fn propagation_is_sound_against_enumeration() {
    let mut violations = 0;
    for seed in 0..300 {
        let mut rng = rng_from_seed(seed + 77);
        let n = 8 + (seed as usize % 8);
        let u = ClauseUniverse::new(n, 3).unwrap();
        let mut clauses: Vec<Clause> = Vec::new();
        for _ in 0..rng.random_range(n..4 * n) {
            let c = u.clause_at(rng.random_range(0..u.size())).unwrap();
            if !clauses.contains(&c) {
                clauses.push(c);
            }
        }
        let f = Formula::from_clauses(n, 3, clauses).unwrap();
        let mut xi = PartialAssignment::unassigned(n);
        for v in 0..n {
            if rng.random_bool(0.3) {
                xi.set(v, Some(rng.random_bool(0.5)));
            }
        }
        let Ok(res) = crate::formula::simplify_partial(&f, &xi) else { continue };
        let Ok(p) = unit_propagation(&res, &xi) else { continue };
        for mask in 0u64..1 << n {
            let a = Assignment::from_mask(n, mask);
            let extends = (0..n).all(|v| xi.get(v).is_none_or(|b| a.get(v) == b));
            if extends && f.satisfied_by(&a) {
                for v in 0..n {
                    if let Some(b) = p.assignment.get(v) {
                        if a.get(v) != b {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn component_search_examples() {
    let c = SolverConfig::new(4, 1);
    let xi = PartialAssignment::unassigned(4);
    assert_eq!(
        exhaustive_component_search(&residual(4, &[]), &xi, &c).unwrap(),
        Assignment::all(4, false)
    );
    let a = exhaustive_component_search(&residual(4, &[&[1, 2]]), &xi, &c).unwrap();
    assert_eq!(a, Assignment::from_vec(vec![false, true, false, false]));

    let mut small = SolverConfig::new(4, 1);
    small.component_cap = 2;
    assert_eq!(
        exhaustive_component_search(&residual(4, &[&[1, 2, 3]]), &xi, &small),
        Err(FailureReason::ComponentTooLarge)
    );
    assert_eq!(
        exhaustive_component_search(&residual(4, &[&[1, 2], &[1, -2], &[-1, 2], &[-1, -2]]), &xi, &c),
        Err(FailureReason::ExhaustiveUnsat)
    );
}

#[test]
fn component_search_is_lexicographically_least() {
    for seed in 0..100 {
        let mut rng = rng_from_seed(seed + 5);
        let n = 6;
        let u = ClauseUniverse::new(n, 2).unwrap();
        let mut clauses: Vec<Clause> = Vec::new();
        for _ in 0..rng.random_range(1..8) {
            let c = u.clause_at(rng.random_range(0..u.size())).unwrap();
            if !clauses.contains(&c) {
                clauses.push(c);
            }
        }
        let res = ResidualFormula::new(n, clauses.clone());
        let f = Formula::from_clauses(n, 2, clauses).unwrap();
        let got = exhaustive_component_search(&res, &PartialAssignment::unassigned(n), &SolverConfig::new(64, 1));
        // Lexicographic order over the values of x0, x1, ...: numeric order of
        // the bit-reversed mask.
        let best = (0u64..1 << n)
            .map(|r| Assignment::from_vec((0..n).map(|v| r >> (n - 1 - v) & 1 == 1).collect()))
            .find(|a| f.satisfied_by(a));
        match best {
            None => assert!(got.is_err()),
            Some(b) => {
                let got = got.unwrap();
                assert!(f.satisfied_by(&got));
                // Components are solved independently; the least overall
                // solution restricted to used variables is the same.
                let used = res.vars();
                for v in used.iter() {
                    assert_eq!(got.get(v), b.get(v), "seed {seed} var {v}");
                }
            }
        }
    }
}

#[test]
fn solve_examples() {
    let f = dimacs(5, 3, &[&[1, -2, 3]]);
    for t in [1, 5, 100] {
        let out = solve(&f, &SolverConfig::new(5, t));
        assert!(out.is_success());
        assert!(f.satisfied_by(out.assignment().unwrap()));
    }
    let u = ClauseUniverse::new(3, 3).unwrap();
    let all = Formula::from_clauses(3, 3, (0..8).map(|i| u.clause_at(i).unwrap())).unwrap();
    let out = solve(&all, &SolverConfig::for_formula(&all).with_sweep(vec![1, 2, 3]));
    assert!(!out.is_success());
    assert_eq!(out.attempts.len(), 3);
}

#[test]
fn solve_planted_instance_with_sweep() {
    let mut rng = rng_from_seed(21);
    let n = 500;
    let psi = Assignment::from_vec((0..n).map(|_| rng.random_bool(0.5)).collect());
    let f = generate_planted(n, 3, 40 * n as u64, &psi, 4).unwrap();
    let out = solve(&f, &SolverConfig::for_formula(&f));
    assert!(out.is_success(), "{:?}", out.attempts);
    let json = out.to_json();
    assert_eq!(json["result"], "sat");
    assert!(json["stages"][0]["flips_per_round"].is_array());
}

#[test]
fn solve_is_deterministic() {
    let mut rng = rng_from_seed(2);
    let n = 200;
    let psi = Assignment::from_vec((0..n).map(|_| rng.random_bool(0.5)).collect());
    let f = generate_planted(n, 3, 30 * n as u64, &psi, 9).unwrap();
    let c = SolverConfig::for_formula(&f);
    assert_eq!(solve(&f, &c), solve(&f, &c));
}
