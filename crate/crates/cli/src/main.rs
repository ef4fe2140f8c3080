use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use satprocess::corebuilder::{analyze_sweep, CoreParams};
use satprocess::formula::{read_dimacs, write_dimacs, ReadOptions};
use satprocess::generator::{generate, ProcessConfig};
use satprocess::harness::{
    evolve, evolve_csv, run_bench, run_experiment, two_step_ks, two_step_test, BenchConfig, EvolveConfig,
    ExperimentSpec, TwoStepTestConfig,
};
use satprocess::oracle::{solution_masks, summarize_masks, DEFAULT_ORACLE_LIMIT};
use satprocess::solver::{solve, SolverConfig};
use satprocess::{Assignment, Error, Formula};

#[derive(Parser)]
#[command(name = "satprocess", version, about = "Restricted random k-SAT processes and a majority-vote solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a formula and its trace.
    Generate(GenerateArgs),
    /// Run the majority-vote solver on a DIMACS file.
    Solve(SolveArgs),
    /// Oracle summary and core extraction for a DIMACS file.
    Analyze(AnalyzeArgs),
    /// Snapshot the permutation process at several clause counts.
    Evolve(EvolveArgs),
    /// Compare the one-round and two-round coin processes.
    TwoStepTest(TwoStepArgs),
    /// Run a TOML experiment grid.
    Experiment(ExperimentArgs),
    /// Time generation and solving.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Dimacs,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Perm,
    Coin,
    Unrestricted,
    TwoStep,
    Planted,
}

#[derive(Args)]
struct Density {
    /// Number of clauses scanned (perm) or drawn (planted).
    #[arg(long)]
    m: Option<u64>,
    /// Clauses per variable; `m = ratio * n`.
    #[arg(long)]
    ratio: Option<f64>,
    /// Coin probability per clause.
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[command(flatten)]
    density: Density,
    #[arg(long, value_enum, default_value = "perm")]
    variant: VariantArg,
    /// First-round probability of the two-round process.
    #[arg(long)]
    p1: Option<f64>,
    /// Second-round probability; derived from p and p1 when absent.
    #[arg(long)]
    p2: Option<f64>,
    /// Scan the two-round output through the acceptance rule.
    #[arg(long)]
    filter: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solver conflicts allowed for acceptance checks.
    #[arg(long)]
    conflict_budget: Option<u64>,
    /// Formula path; the trace goes to `<out>.trace.jsonl`. Stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace path, overriding the default next to `--out`.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dimacs")]
    format: Format,
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    /// Single threshold, replacing the sweep.
    #[arg(long)]
    t: Option<u64>,
    /// Comma-separated thresholds tried in order.
    #[arg(long, value_delimiter = ',')]
    t_sweep: Option<Vec<u64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ORACLE_LIMIT)]
    oracle_limit: usize,
    /// Hamming distance linking solutions into a cluster.
    #[arg(long, default_value_t = 1)]
    link_distance: usize,
    #[arg(long, value_delimiter = ',')]
    t_sweep: Option<Vec<u64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated clause-per-variable ratios to snapshot at.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20")]
    ratios: Vec<u64>,
    /// Explicit snapshot clause counts, replacing `--ratios`.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<u64>>,
    /// Add beta, frozen fraction, radius and cluster columns.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = DEFAULT_ORACLE_LIMIT)]
    oracle_limit: usize,
    #[arg(long)]
    conflict_budget: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct TwoStepArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    #[arg(long, default_value_t = 0.1)]
    p1: f64,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Repetitions for a Kolmogorov-Smirnov check of the p-values.
    #[arg(long)]
    ks_reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    spec: PathBuf,
    /// CSV path, overriding the spec.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave out the timing columns.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 60)]
    ratio: u64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time planted instances instead of the restricted process.
    #[arg(long)]
    planted: bool,
    #[arg(long)]
    conflict_budget: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Solver(String),
    Config(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(m) => Failure::Io(m),
            other => Failure::Config(other.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn config_err(message: impl Into<String>) -> Failure {
    Failure::Config(message.into())
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn json_text(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable value") + "\n"
}

fn read_formula(path: &Path) -> Result<Formula, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(read_dimacs(&text, &ReadOptions::default())?)
}

fn formula_json(f: &Formula) -> serde_json::Value {
    serde_json::json!({
        "n": f.num_vars(),
        "k": f.width(),
        "clauses": f.clauses().iter().map(|c| c.to_dimacs()).collect::<Vec<_>>(),
    })
}

fn cmd_generate(a: GenerateArgs) -> CliResult {
    let density = &a.density;
    let m = || -> Result<u64, Failure> {
        match (density.m, density.ratio) {
            (Some(m), None) => Ok(m),
            (None, Some(r)) if r >= 0.0 => Ok((r * a.n as f64).round() as u64),
            _ => Err(config_err("give exactly one of --m or --ratio")),
        }
    };
    let p = || density.p.ok_or_else(|| config_err("--p is required for this variant"));
    let mut config = match a.variant {
        VariantArg::Perm => ProcessConfig::perm(a.n, a.k, m()?, a.seed),
        VariantArg::Planted => ProcessConfig::planted(a.n, a.k, m()?, a.seed),
        VariantArg::Coin => ProcessConfig::coin(a.n, a.k, p()?, a.seed),
        VariantArg::Unrestricted => ProcessConfig::unrestricted(a.n, a.k, p()?, a.seed),
        VariantArg::TwoStep => {
            let p1 = a.p1.ok_or_else(|| config_err("--p1 is required for two-step"))?;
            let p2 = match (a.p2, density.p) {
                (Some(p2), _) => p2,
                (None, Some(p)) if p1 < 1.0 => (p - p1) / (1.0 - p1),
                _ => return Err(config_err("two-step needs --p2, or --p with --p1 < 1")),
            };
            ProcessConfig::two_step(a.n, a.k, p1, p2, a.filter, a.seed)
        }
    };
    config.conflict_budget = a.conflict_budget;
    let (formula, trace) = generate(&config)?;
    let body = match a.format {
        Format::Dimacs => write_dimacs(&formula),
        Format::Json => json_text(&formula_json(&formula)),
        Format::Csv => return Err(config_err("generate writes dimacs or json")),
    };
    emit(a.out.as_deref(), &body)?;
    let trace_path = a.trace.or_else(|| {
        a.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".trace.jsonl");
            PathBuf::from(s)
        })
    });
    if let Some(p) = trace_path {
        fs::write(&p, trace.to_jsonl(a.n, a.k)).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn solver_config(f: &Formula, t: Option<u64>, sweep: Option<Vec<u64>>) -> Result<SolverConfig, Failure> {
    let mut c = SolverConfig::for_formula(f);
    if let Some(t) = t {
        c.t = t;
        c.t_sweep = None;
    }
    if let Some(s) = sweep {
        c = c.with_sweep(s);
    }
    c.validate()?;
    Ok(c)
}

fn cmd_solve(a: SolveArgs) -> CliResult {
    let f = read_formula(&a.input)?;
    let config = solver_config(&f, a.t, a.t_sweep)?;
    let outcome = solve(&f, &config);
    let body = match a.format {
        Format::Json => json_text(&outcome.to_json()),
        Format::Dimacs => match outcome.assignment() {
            Some(x) => {
                let lits: Vec<String> = (0..x.len())
                    .map(|v| if x.get(v) { format!("{}", v + 1) } else { format!("-{}", v + 1) })
                    .collect();
                format!("s SATISFIABLE\nv {} 0\n", lits.join(" "))
            }
            None => "s UNKNOWN\n".to_string(),
        },
        Format::Csv => return Err(config_err("solve writes json or dimacs")),
    };
    emit(a.out.as_deref(), &body)?;
    match &outcome.result {
        Ok(_) => Ok(()),
        Err(reason) => Err(Failure::Solver(format!("solver failed: {reason}"))),
    }
}

fn cmd_analyze(a: AnalyzeArgs) -> CliResult {
    if a.format != Format::Json {
        return Err(config_err("analyze writes json"));
    }
    let f = read_formula(&a.input)?;
    let n = f.num_vars();
    let config = solver_config(&f, None, a.t_sweep)?;
    let (oracle, oracle_psi) = if n <= a.oracle_limit.min(64) {
        let masks = solution_masks(&f, a.oracle_limit)?;
        let summary = summarize_masks(n, &masks, a.link_distance);
        let first = masks.first().map(|&m| Assignment::from_mask(n, m));
        let value: serde_json::Value =
            serde_json::from_str(&summary.to_json()).expect("summary serializes to json");
        (value, first)
    } else {
        (
            serde_json::json!({ "refused": format!("n={n} above the oracle limit {}", a.oracle_limit) }),
            None,
        )
    };
    // Core extraction needs a satisfying assignment: the solver's, else the
    // oracle's lexicographically first.
    let outcome = solve(&f, &config);
    let psi = outcome.assignment().cloned().or(oracle_psi);
    let core = match &psi {
        Some(psi) => analyze_sweep(&f, psi, &CoreParams::desk(1), &config.thresholds())?.to_json(),
        None => serde_json::Value::Null,
    };
    let body = serde_json::json!({
        "n": n,
        "clauses": f.len(),
        "oracle": oracle,
        "solve": outcome.to_json(),
        "core": core,
    });
    emit(a.out.as_deref(), &json_text(&body))
}

fn cmd_evolve(a: EvolveArgs) -> CliResult {
    let mut config = match a.m {
        Some(ms) => EvolveConfig::new(a.n, a.k, a.seed, ms),
        None => EvolveConfig::ratios(a.n, a.k, a.seed, &a.ratios)?,
    }
    .with_oracle(a.oracle);
    config.oracle_limit = a.oracle_limit;
    config.conflict_budget = a.conflict_budget;
    let rows = evolve(&config)?;
    let body = match a.format {
        Format::Csv => evolve_csv(&rows),
        Format::Json => json_text(&serde_json::to_value(&rows).expect("serializable rows")),
        Format::Dimacs => return Err(config_err("evolve writes csv or json")),
    };
    emit(a.out.as_deref(), &body)
}

fn cmd_two_step(a: TwoStepArgs) -> CliResult {
    let config = TwoStepTestConfig {
        n: a.n,
        k: a.k,
        p: a.p,
        p1: a.p1,
        p2: a.p2,
        samples: a.samples,
        seed: a.seed,
        hash_buckets: 64,
    };
    let report = two_step_test(&config)?;
    let mut body = serde_json::to_value(&report).expect("serializable report");
    if let Some(reps) = a.ks_reps {
        let (_, ks) = two_step_ks(&config, reps)?;
        body["ks"] = serde_json::to_value(ks).expect("serializable ks");
    }
    emit(a.out.as_deref(), &json_text(&body))
}

fn cmd_experiment(a: ExperimentArgs) -> CliResult {
    let mut spec = ExperimentSpec::load(&a.spec)?;
    if a.out.is_some() {
        spec.output.csv = a.out;
    }
    let report = run_experiment(&spec)?;
    report.write_outputs(&spec.output, !a.no_timings)?;
    emit(None, &json_text(&report.summary_json()))
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    let report = run_bench(&BenchConfig {
        n: a.n,
        k: a.k,
        ratio: a.ratio,
        planted: a.planted,
        repetitions: a.reps,
        seed: a.seed,
        conflict_budget: a.conflict_budget,
    })?;
    emit(
        a.out.as_deref(),
        &json_text(&serde_json::to_value(&report).expect("serializable report")),
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::TwoStepTest(a) => cmd_two_step(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Solver(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(m)) => {
            eprintln!("i/o error: {m}");
            ExitCode::from(3)
        }
    }
}
