//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion.
//!
//! Exits 0 after reporting unless `ACCEPTANCE_STRICT=1`, in which case any
//! failed criterion makes the run fail. `ACCEPTANCE_CONFLICT_BUDGET`
//! overrides the generation budget used by criteria 5-7.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use satprocess::corebuilder::{analyze_sweep, CoreParams};
use satprocess::formula::{clause_universe_size, simplify_partial, Clause, Formula, PartialAssignment};
use satprocess::generator::{
    check_satisfiable, derive_seed, generate, splitmix64, Decision, GenerationTrace, ProcessConfig,
};
use satprocess::harness::{two_step_test, TwoStepTestConfig};
use satprocess::oracle::{check_proportional_with, solution_masks, summarize_masks};
use satprocess::solver::{ceil_log2, majority_vote, solve, unit_propagation, SolverConfig};
use satprocess::Assignment;

const SEED: u64 = 0x5eed_2026;
const DEFAULT_BUDGET: u64 = 100_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn clause_mask(c: &Clause) -> u64 {
    c.vars().fold(0, |m, v| m | 1 << v)
}

/// Whether assignment mask `x` satisfies `c`.
fn sat_mask(c: &Clause, x: u64) -> bool {
    c.literals().iter().any(|l| (x >> l.var() & 1 == 1) == l.is_positive())
}

/// Replays a trace against the full solution list: a rejected clause must
/// falsify every remaining solution, an accepted one keep at least one.
fn certify_trace(n: usize, trace: &GenerationTrace) -> Result<(), String> {
    let mut alive: Vec<u64> = (0..1u64 << n).collect();
    for (i, e) in trace.events.iter().enumerate() {
        let kept: Vec<u64> = alive.iter().copied().filter(|&x| sat_mask(&e.clause, x)).collect();
        match e.decision {
            Decision::Rejected if !kept.is_empty() => {
                return Err(format!("event {i}: rejected clause has {} models", kept.len()))
            }
            Decision::Accepted if kept.is_empty() => {
                return Err(format!("event {i}: accepted clause leaves no model"))
            }
            Decision::Accepted => alive = kept,
            _ => {}
        }
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (mut certified, mut rejections, mut bad) = (0, 0usize, Vec::new());
    for i in 0..500u64 {
        let n = 10 + (i * 7 % 51) as usize;
        let ratio = 1 + i * 13 % 30;
        let config = ProcessConfig::perm(n, 3, ratio * n as u64, derive_seed(SEED, &[1, i]));
        let (f, trace) = match generate(&config) {
            Ok(x) => x,
            Err(e) => {
                bad.push(format!("run {i}: {e}"));
                continue;
            }
        };
        let witnessed = trace.witness.as_ref().is_some_and(|w| f.satisfied_by(w));
        if !witnessed {
            bad.push(format!("run {i}: witness missing or wrong"));
        }
        rejections += trace.counts.rejected;
        if n <= 15 {
            match certify_trace(n, &trace) {
                Ok(()) => certified += 1,
                Err(e) => bad.push(format!("run {i} (n={n}): {e}")),
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && elapsed <= Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "500 runs, all witness-verified={}, {certified} traces certified at n<=15, {rejections} rejections, {:.1}s (limit 120s){}",
            bad.is_empty(),
            elapsed.as_secs_f64(),
            bad.first().map(|b| format!("; first problem: {b}")).unwrap_or_default()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut problems = Vec::new();
    for n in 3..=6usize {
        let universe = clause_universe_size(n, 3).unwrap();
        let expect = 7 * universe / 8;
        for s in 0..20u64 {
            let config = ProcessConfig::perm(n, 3, universe, derive_seed(SEED, &[2, n as u64, s]));
            let (f, _) = generate(&config).unwrap();
            let beta = solution_masks(&f, 26).unwrap().len();
            if f.len() as u64 != expect || beta != 1 {
                problems.push(format!("n={n} seed {s}: {} clauses, beta={beta}", f.len()));
            }
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "n=3..6 x 20 seeds at m=M: {} mismatches{}",
            problems.len(),
            problems.first().map(|p| format!(" ({p})")).unwrap_or_default()
        ),
    )
}

fn criterion_3_4() -> (Outcome, Outcome) {
    let start = Instant::now();
    let n = 20usize;
    let ratios = [5u64, 10, 15, 20];
    let mut frozen = Vec::new();
    let mut entropy = Vec::new();
    for &r in &ratios {
        let (mut fsum, mut esum) = (0.0, 0.0);
        for s in 0..100u64 {
            let config = ProcessConfig::perm(n, 3, r * n as u64, derive_seed(SEED, &[3, r, s]));
            let (f, _) = generate(&config).unwrap();
            let masks = solution_masks(&f, 26).unwrap();
            let summary = summarize_masks(n, &masks, 1);
            fsum += summary.frozen_fraction();
            esum += (masks.len() as f64).log2() / n as f64;
        }
        frozen.push(fsum / 100.0);
        entropy.push(esum / 100.0);
    }
    // Pilot thresholds 0.9 and 0.05, each with 5 percentage points of slack.
    let slack = 0.05;
    let monotone_f = frozen.windows(2).all(|w| w[1] + slack >= w[0]);
    let monotone_e = entropy.windows(2).all(|w| w[1] <= w[0] + slack);
    let strict = frozen.windows(2).all(|w| w[1] >= w[0]) && entropy.windows(2).all(|w| w[1] <= w[0]);
    let elapsed = start.elapsed();
    let pass3 = monotone_f
        && monotone_e
        && frozen[3] >= 0.9 - slack
        && entropy[3] <= 0.05 + slack
        && elapsed <= Duration::from_secs(600);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    let c3 = outcome(
        pass3,
        format!(
            "n=20, ratios 5/10/15/20: mean frozen [{}], mean log2(beta)/n [{}], strictly monotone={strict}, {:.1}s",
            fmt(&frozen),
            fmt(&entropy),
            elapsed.as_secs_f64()
        ),
    );

    let mut unique = 0;
    for s in 0..200u64 {
        let config = ProcessConfig::perm(n, 3, 20 * n as u64, derive_seed(SEED, &[4, s]));
        let (f, _) = generate(&config).unwrap();
        if solution_masks(&f, 26).unwrap().len() == 1 {
            unique += 1;
        }
    }
    let c4 = outcome(
        unique >= 180,
        format!("n=20, ratio 20: beta=1 in {unique}/200 trials (need 180)"),
    );
    (c3, c4)
}

struct Instance {
    formula: Formula,
    psi: Assignment,
    solved: Option<Assignment>,
    solve_time: Duration,
}

#[derive(Default)]
struct PointStats {
    trials: usize,
    solved: usize,
    maj_close: usize,
    covered: usize,
    small_components: usize,
    solve_time: Duration,
}

fn instance_stats(instances: &[Instance], n: usize) -> PointStats {
    let cap = 3 * ceil_log2(n);
    let mut st = PointStats {
        trials: instances.len(),
        ..Default::default()
    };
    for inst in instances {
        st.solve_time += inst.solve_time;
        let rep = analyze_sweep(
            &inst.formula,
            &inst.psi,
            &CoreParams::desk(1),
            &SolverConfig::for_formula(&inst.formula).thresholds(),
        )
        .expect("psi satisfies the instance");
        st.covered += (rep.coverage() >= 0.8) as usize;
        st.small_components += (rep.largest_component() <= cap) as usize;
        if let Some(a) = &inst.solved {
            st.solved += 1;
            let maj = majority_vote(&inst.formula);
            st.maj_close += (maj.hamming(a) * 10 <= n) as usize;
        }
    }
    st
}

fn solve_instance(formula: Formula, psi: Assignment) -> Instance {
    let start = Instant::now();
    let out = solve(&formula, &SolverConfig::for_formula(&formula));
    let solve_time = start.elapsed();
    Instance {
        solved: out.assignment().cloned(),
        formula,
        psi,
        solve_time,
    }
}

const POINTS: [(usize, u64); 9] = [
    (500, 40),
    (500, 60),
    (500, 80),
    (1000, 40),
    (1000, 60),
    (1000, 80),
    (2000, 40),
    (2000, 60),
    (2000, 80),
];

fn criteria_5_6_7(notes: &mut Vec<String>) -> (Outcome, Outcome, Outcome) {
    let budget = std::env::var("ACCEPTANCE_CONFLICT_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_BUDGET);
    let trials = 100usize;
    // More than this many failed trials decides a point.
    let allowed = trials / 20;
    let mut lines5 = Vec::new();
    let (mut pass5, mut pass6, mut pass7) = (true, true, true);
    let mut lines6 = Vec::new();
    let mut lines7 = Vec::new();
    for &(n, ratio) in &POINTS {
        let mut instances = Vec::new();
        let mut aborted = 0;
        let mut run = 0;
        let mut abort_note = String::new();
        while run < trials && aborted <= allowed {
            let seed = derive_seed(SEED, &[5, n as u64, ratio, run as u64]);
            let config = ProcessConfig::perm(n, 3, ratio * n as u64, seed).with_conflict_budget(budget);
            match generate(&config) {
                Ok((f, trace)) => {
                    let psi = trace.witness.expect("restricted output has a witness");
                    instances.push(solve_instance(f, psi));
                }
                Err(e) => {
                    aborted += 1;
                    abort_note = e.to_string();
                }
            }
            run += 1;
        }
        let st = instance_stats(&instances, n);
        let ok5 = st.solved * 100 >= 95 * trials
            && (n != 2000 || st.solve_time.as_secs_f64() / st.trials.max(1) as f64 <= 5.0);
        pass5 &= ok5;
        lines5.push(format!(
            "n={n} ratio={ratio}: {} generated, {aborted} aborted of {run} attempted, {} solved",
            st.trials, st.solved
        ));
        if !abort_note.is_empty() {
            notes.push(format!("note: criterion 5 n={n} ratio={ratio}: last abort: {abort_note}"));
        }
        pass6 &= st.solved > 0 && st.maj_close * 100 >= 95 * st.solved;
        lines6.push(format!("n={n} ratio={ratio}: {}/{}", st.maj_close, st.solved));
        pass7 &= st.covered * 100 >= 95 * trials && st.small_components * 100 >= 95 * trials;
        lines7.push(format!(
            "n={n} ratio={ratio}: coverage {}/{trials}, component {}/{trials}",
            st.covered, st.small_components
        ));
    }
    (
        outcome(pass5, format!("budget {budget} conflicts per generation; {}", lines5.join("; "))),
        outcome(pass6, format!("majority within 10%: {}", lines6.join("; "))),
        outcome(pass7, lines7.join("; ")),
    )
}

/// Same pipeline on planted instances of the criterion-5 grid.
fn planted_notes(notes: &mut Vec<String>) {
    for &(n, ratio) in &POINTS {
        let trials = 100;
        let mut instances = Vec::new();
        for t in 0..trials as u64 {
            let config = ProcessConfig::planted(n, 3, ratio * n as u64, derive_seed(SEED, &[50, n as u64, ratio, t]));
            let (f, trace) = generate(&config).unwrap();
            instances.push(solve_instance(f, trace.witness.unwrap()));
        }
        let st = instance_stats(&instances, n);
        notes.push(format!(
            "note: planted n={n} ratio={ratio}: solved {}/{trials}, mean solve {:.3}s, majority within 10% {}/{}, coverage>=0.8 {}/{trials}, largest component <= {} {}/{trials}",
            st.solved,
            st.solve_time.as_secs_f64() / trials as f64,
            st.maj_close,
            st.solved,
            st.covered,
            3 * ceil_log2(n),
            st.small_components
        ));
    }
}

fn criterion_8() -> Outcome {
    let null = two_step_test(&TwoStepTestConfig::standard(0)).unwrap();
    let control = two_step_test(&TwoStepTestConfig::standard(0).mismatched(0.1)).unwrap();
    outcome(
        null.p_value > 0.01 && control.p_value < 0.001,
        format!(
            "n=4, 1e5 samples: matched p={:.4} (counts {:.4}, identity {:.4}); mismatched p2 (gap 0.1) p={:.3e}",
            null.p_value, null.clause_count.p_value, null.identity.p_value, control.p_value
        ),
    )
}

fn random_formula(n: usize, ratio_milli: u64, seed: u64) -> Formula {
    let universe = clause_universe_size(n, 3).unwrap() as f64;
    let p = (ratio_milli as f64 / 1000.0 * n as f64 / universe).min(1.0);
    let (f, _) = generate(&ProcessConfig::unrestricted(n, 3, p, seed)).unwrap();
    f
}

/// Models of `f` consistent with `xi`.
fn extensions(f: &Formula, xi: &PartialAssignment) -> Vec<u64> {
    let n = f.num_vars();
    solution_masks(f, 26)
        .unwrap()
        .into_iter()
        .filter(|&x| (0..n).all(|v| xi.get(v).is_none_or(|b| (x >> v & 1 == 1) == b)))
        .collect()
}

fn criterion_9() -> Outcome {
    // Unit propagation against the models extending the partial assignment.
    let mut up_violations = 0;
    for i in 0..500u64 {
        let h = splitmix64(derive_seed(SEED, &[9, 1, i]));
        let n = 6 + (h % 13) as usize;
        let f = random_formula(n, 1500 + (h >> 8) % 3000, h);
        let bits = splitmix64(h);
        let keep = splitmix64(bits);
        let xi = PartialAssignment::from_vec(
            (0..n)
                .map(|v| (keep >> v & 3 == 0).then_some(bits >> v & 1 == 1))
                .collect(),
        );
        let models = extensions(&f, &xi);
        let residual = match simplify_partial(&f, &xi) {
            Ok(r) => r,
            Err(_) => {
                up_violations += !models.is_empty() as usize;
                continue;
            }
        };
        match unit_propagation(&residual, &xi) {
            Err(_) => up_violations += !models.is_empty() as usize,
            Ok(p) => {
                let forced_ok = models.iter().all(|&x| {
                    (0..n).all(|v| p.assignment.get(v).is_none_or(|b| (x >> v & 1 == 1) == b))
                });
                let closed = p.residual.clauses().iter().all(|c| {
                    c.width() >= 2 && c.vars().all(|v| !p.assignment.is_assigned(v))
                });
                up_violations += (!forced_ok || !closed) as usize;
            }
        }
    }

    // check_satisfiable against enumeration.
    let mut sat_disagreements = 0;
    let mut sat_count = 0;
    for i in 0..500u64 {
        let h = splitmix64(derive_seed(SEED, &[9, 2, i]));
        let n = 5 + (h % 11) as usize;
        let f = random_formula(n, 3000 + (h >> 8) % 3000, h);
        let truth = !solution_masks(&f, 26).unwrap().is_empty();
        let answer = check_satisfiable(&f);
        sat_count += truth as usize;
        let ok = match &answer {
            Some(a) => truth && f.satisfied_by(a),
            None => !truth,
        };
        sat_disagreements += !ok as usize;
    }

    // Proportionality against all subsets.
    let mut prop_disagreements = 0;
    let mut violated = 0;
    let mut cases = 0;
    for i in 0..200u64 {
        let h = splitmix64(derive_seed(SEED, &[9, 3, i]));
        let n = 6 + (h % 9) as usize;
        let f = random_formula(n, 500 + (h >> 8) % 4000, h);
        let masks: Vec<u64> = f.clauses().iter().map(clause_mask).collect();
        for (j, rho) in [1.0f64, 1.5, 2.5].into_iter().enumerate() {
            let cap = 2 + (splitmix64(h ^ j as u64) % (n as u64 - 1)) as usize;
            let brute = (1u64..1 << n).filter(|u| u.count_ones() as usize <= cap).any(|u| {
                let dense = masks.iter().filter(|&&m| (m & u).count_ones() >= 2).count();
                dense as f64 >= rho * u.count_ones() as f64
            });
            let report = check_proportional_with(&f, rho, cap, 14).unwrap();
            cases += 1;
            violated += brute as usize;
            prop_disagreements += (report.is_proportional() == brute || !report.exhaustive) as usize;
        }
    }
    outcome(
        up_violations == 0 && sat_disagreements == 0 && prop_disagreements == 0,
        format!(
            "propagation: {up_violations} violations in 500 residuals; check_satisfiable: {sat_disagreements} disagreements in 500 formulas ({sat_count} satisfiable); proportionality: {prop_disagreements} disagreements in {cases} cases ({violated} violated)"
        ),
    )
}

fn run_cli(bin: &str, args: &[&str], dir: &Path) -> (i32, Vec<u8>) {
    let out = Command::new(bin)
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn without_timings(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).expect("json output");
    if let Some(o) = v.as_object_mut() {
        for key in ["mean_gen_ms", "mean_solve_ms", "max_solve_ms"] {
            o.remove(key);
        }
    }
    v
}

fn criterion_10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_satprocess");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let spec = "master_seed = 3\ntrials = 3\nanalyses = [\"solve\", \"core\"]\noutput = { csv = \"rows.csv\", json = \"agg.json\" }\n\n[[grid]]\nn = 14\nratio = 6\n\n[[grid]]\nn = 200\nratio = 40\nvariant = \"planted\"\n";
    let commands: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("generate", vec!["generate", "--n", "60", "--ratio", "20", "--seed", "5", "--out", "g.cnf"], vec!["g.cnf", "g.cnf.trace.jsonl"]),
        ("generate planted", vec!["generate", "--n", "500", "--ratio", "40", "--variant", "planted", "--seed", "5", "--out", "p.cnf"], vec!["p.cnf", "p.cnf.trace.jsonl"]),
        ("generate coin json", vec!["generate", "--n", "12", "--p", "0.1", "--variant", "coin", "--seed", "2", "--format", "json"], vec![]),
        ("solve", vec!["solve", "p.cnf"], vec![]),
        ("solve dimacs", vec!["solve", "g.cnf", "--format", "dimacs", "--t-sweep", "1,2"], vec![]),
        ("analyze", vec!["analyze", "g.cnf", "--oracle-limit", "10"], vec![]),
        ("evolve", vec!["evolve", "--n", "14", "--oracle", "--seed", "4"], vec![]),
        ("two-step-test", vec!["two-step-test", "--samples", "20000", "--seed", "8"], vec![]),
        ("experiment", vec!["experiment", "spec.toml", "--no-timings"], vec!["rows.csv", "agg.json"]),
        ("bench", vec!["bench", "--n", "300", "--ratio", "40", "--reps", "2", "--planted"], vec![]),
    ];
    let mut outputs: [Vec<Vec<u8>>; 2] = [Vec::new(), Vec::new()];
    let mut codes: [Vec<i32>; 2] = [Vec::new(), Vec::new()];
    for (side, dir) in dirs.iter().enumerate() {
        std::fs::write(dir.path().join("spec.toml"), spec).unwrap();
        for (name, args, files) in &commands {
            let (code, stdout) = run_cli(bin, args, dir.path());
            codes[side].push(code);
            let stdout = if *name == "bench" {
                serde_json::to_vec(&without_timings(&stdout)).unwrap()
            } else {
                stdout
            };
            // Commands writing files are compared on the files.
            if files.is_empty() {
                outputs[side].push(stdout);
            }
            for file in files {
                outputs[side].push(std::fs::read(dir.path().join(file)).unwrap_or_default());
            }
        }
    }
    let differing: Vec<String> = outputs[0]
        .iter()
        .zip(&outputs[1])
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, _)| i.to_string())
        .collect();
    let failing: Vec<&str> = commands
        .iter()
        .zip(&codes[0])
        .filter(|(_, &c)| c != 0)
        .map(|((name, _, _), _)| *name)
        .collect();
    let empty = outputs[0].iter().filter(|o| o.is_empty()).count();
    outcome(
        differing.is_empty() && failing.is_empty() && empty == 0 && codes[0] == codes[1],
        format!(
            "{} commands, {} outputs compared: {} differing, nonzero exits: {:?}, empty outputs: {empty}",
            commands.len(),
            outputs[0].len(),
            differing.len(),
            failing
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags; a name filter skips the suite.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if filter.iter().any(|f| !"acceptance".contains(f.as_str())) {
        return;
    }
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut results: Vec<bool> = Vec::new();
    let mut report = |id: usize, o: Outcome, t: Duration| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status}: {} [{:.1}s]", o.detail, t.as_secs_f64());
        results.push(o.pass);
    };
    let mut notes = Vec::new();

    let start = Instant::now();
    report(1, criterion_1(), start.elapsed());
    let start = Instant::now();
    report(2, criterion_2(), start.elapsed());
    let start = Instant::now();
    let (c3, c4) = criterion_3_4();
    report(3, c3, start.elapsed());
    report(4, c4, Duration::ZERO);
    let start = Instant::now();
    let (c5, c6, c7) = criteria_5_6_7(&mut notes);
    report(5, c5, start.elapsed());
    report(6, c6, Duration::ZERO);
    report(7, c7, Duration::ZERO);
    let start = Instant::now();
    report(8, criterion_8(), start.elapsed());
    let start = Instant::now();
    report(9, criterion_9(), start.elapsed());
    let start = Instant::now();
    report(10, criterion_10(), start.elapsed());

    planted_notes(&mut notes);
    for note in &notes {
        println!("{note}");
    }
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if strict && passed < results.len() {
        std::process::exit(1);
    }
}
