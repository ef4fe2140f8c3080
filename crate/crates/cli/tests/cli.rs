use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satprocess"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn generate_writes_formula_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["generate", "--n", "100", "--k", "3", "--ratio", "60", "--seed", "7", "--out", "f.cnf"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("f.cnf")).unwrap();
    assert!(text.starts_with("p cnf 100 "));
    let trace = std::fs::read_to_string(dir.path().join("f.cnf.trace.jsonl")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert!(lines[0].contains("\"header\"") && lines.last().unwrap().contains("\"summary\""));
    assert_eq!(lines.len(), 6000 + 2);
}

#[test]
fn solve_planted_success_and_sweep_override() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["generate", "--n", "1000", "--ratio", "60", "--variant", "planted", "--seed", "2", "--out", "p.cnf"]).status.success());
    let out = run(dir.path(), &["solve", "p.cnf"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["result"], "sat");
    assert_eq!(v["stages"][0]["t"], 3);
    let out = run(dir.path(), &["solve", "p.cnf", "--t-sweep", "9,4"]);
    assert_eq!(json(&out)["stages"][0]["t"], 9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("u.cnf"), "p cnf 3 8\n1 2 3 0\n1 2 -3 0\n1 -2 3 0\n1 -2 -3 0\n-1 2 3 0\n-1 2 -3 0\n-1 -2 3 0\n-1 -2 -3 0\n").unwrap();
    let out = run(dir.path(), &["solve", "u.cnf"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["result"], "failed");
    assert_eq!(run(dir.path(), &["generate", "--n", "10", "--ratio", "2", "--m", "3"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["generate", "--n", "10"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["evolve", "--n", "40", "--oracle"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["solve", "nope.cnf"]).status.code(), Some(3));
    assert_eq!(run(dir.path(), &["bogus"]).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.cnf"), "p cnf 2 1\n1 x 0\n").unwrap();
    assert_eq!(run(dir.path(), &["solve", "bad.cnf"]).status.code(), Some(2));
}

#[test]
fn generate_json_and_planted_variants() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["generate", "--n", "8", "--m", "20", "--format", "json", "--seed", "1"]);
    let v = json(&out);
    assert_eq!(v["n"], 8);
    assert_eq!(v["clauses"].as_array().unwrap().len(), 20);
    let out = run(dir.path(), &["generate", "--n", "6", "--variant", "two-step", "--p", "0.3", "--p1", "0.1", "--seed", "3"]);
    assert!(out.status.success());
}

#[test]
fn analyze_and_evolve_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["generate", "--n", "16", "--ratio", "12", "--seed", "4", "--out", "s.cnf"]).status.success());
    let v = json(&run(dir.path(), &["analyze", "s.cnf"]));
    assert!(v["oracle"]["beta"].as_u64().unwrap() >= 1);
    assert!(v["core"]["coverage"].as_f64().is_some());
    let out = run(dir.path(), &["evolve", "--n", "10", "--oracle", "--ratios", "1,4,8"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("m,accepted,rejected,beta"));
}

#[test]
fn experiment_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = "master_seed = 5\ntrials = 10\nanalyses = [\"solve\"]\noutput = { csv = \"out.csv\", json = \"out.json\" }\n\n[[grid]]\nn = 30\nratio = 10\n\n[[grid]]\nn = 40\nratio = 20\n\n[[grid]]\nn = 300\nratio = 40\nvariant = \"planted\"\n";
    std::fs::write(dir.path().join("spec.toml"), spec).unwrap();
    let out = run(dir.path(), &["experiment", "spec.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    // Schema comment, header, 30 rows.
    assert_eq!(csv.lines().count(), 32);
    assert!(csv.lines().nth(1).unwrap().ends_with("gen_ms,solve_ms"));
    let agg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(agg["rows"], 30);
    assert_eq!(agg["aggregates"].as_array().unwrap().len(), 3);
}
