use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evolve::{evolve, EvolveConfig};
use super::two_step::{two_step_test, TwoStepTestConfig};
use crate::corebuilder::{analyze_sweep, CoreParams};
use crate::error::{Error, Result};
use crate::formula::{clause_universe_size, Assignment, Formula};
use crate::generator::{derive_seed, generate, GenerationTrace, ProcessConfig};
use crate::oracle::{summarize_with_limit, DEFAULT_ORACLE_LIMIT};
use crate::solver::{solve, SolverConfig};

/// Version of the row layout written by [`ExperimentReport::to_csv`].
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Trailing CSV columns that hold wall-clock times.
pub const TIMING_COLUMNS: [&str; 2] = ["gen_ms", "solve_ms"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Solve,
    Oracle,
    Core,
    Evolve,
    TwoStepTest,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridVariant {
    #[default]
    Perm,
    Coin,
    Planted,
}

/// One grid point. Exactly one of `m`, `ratio` (clauses per variable) or
/// `p` fixes the density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub m: Option<u64>,
    #[serde(default)]
    pub ratio: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub variant: GridVariant,
}

fn default_k() -> usize {
    3
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub grid: Vec<GridPoint>,
    pub trials: usize,
    pub master_seed: u64,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default = "default_oracle_limit")]
    pub oracle_limit: usize,
    /// Solver conflicts allowed per generation run; unlimited when absent.
    #[serde(default)]
    pub conflict_budget: Option<u64>,
    /// Threshold sweep for the solver; density-based default when absent.
    #[serde(default)]
    pub t_sweep: Option<Vec<u64>>,
    /// Snapshot ratios for the evolve analysis.
    #[serde(default = "default_evolve_ratios")]
    pub evolve_ratios: Vec<u64>,
    /// Samples per two-step test.
    #[serde(default = "default_two_step_samples")]
    pub two_step_samples: usize,
}

fn default_oracle_limit() -> usize {
    DEFAULT_ORACLE_LIMIT
}

fn default_evolve_ratios() -> Vec<u64> {
    (1..=20).collect()
}

fn default_two_step_samples() -> usize {
    10_000
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::InvalidParameters(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut spec = ExperimentSpec::from_toml(&text)?;
        // Output paths are relative to the spec file.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut spec.output.csv, &mut spec.output.json].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameters("trials must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidParameters("empty grid".into()));
        }
        for (i, point) in self.grid.iter().enumerate() {
            let given = [point.m.is_some(), point.ratio.is_some(), point.p.is_some()]
                .iter()
                .filter(|&&b| b)
                .count();
            if given != 1 {
                return Err(Error::InvalidParameters(format!(
                    "grid point {i}: give exactly one of m, ratio, p"
                )));
            }
            clause_universe_size(point.n, point.k)?;
            if self.analyses.contains(&Analysis::Oracle) && point.n > self.oracle_limit {
                return Err(Error::Refused(format!(
                    "grid point {i}: oracle analysis at n={} above the oracle limit {}",
                    point.n, self.oracle_limit
                )));
            }
            if self.analyses.contains(&Analysis::Evolve) && point.n > self.oracle_limit {
                return Err(Error::Refused(format!(
                    "grid point {i}: evolve oracle columns at n={} above the oracle limit {}",
                    point.n, self.oracle_limit
                )));
            }
            point.process(0)?;
        }
        Ok(())
    }

    /// Seed of row `(point, trial)`: `derive_seed(master_seed, [point, trial])`.
    pub fn trial_seed(&self, point: usize, trial: usize) -> u64 {
        derive_seed(self.master_seed, &[point as u64, trial as u64])
    }

    fn has(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }
}

impl GridPoint {
    pub fn process(&self, seed: u64) -> Result<ProcessConfig> {
        let universe = clause_universe_size(self.n, self.k)?;
        let m = || -> Result<u64> {
            let m = match (self.m, self.ratio, self.p) {
                (Some(m), _, _) => m,
                (_, Some(r), _) => (r * self.n as f64).round() as u64,
                (_, _, Some(p)) => (p * universe as f64).round() as u64,
                _ => unreachable!("validated"),
            };
            if m > universe {
                return Err(Error::InvalidParameters(format!(
                    "m={m} exceeds the {universe} possible clauses"
                )));
            }
            Ok(m)
        };
        Ok(match self.variant {
            GridVariant::Perm => ProcessConfig::perm(self.n, self.k, m()?, seed),
            GridVariant::Planted => ProcessConfig::planted(self.n, self.k, m()?, seed),
            GridVariant::Coin => {
                let p = match self.p {
                    Some(p) => p,
                    None => m()? as f64 / universe as f64,
                };
                ProcessConfig::coin(self.n, self.k, p, seed)
            }
        })
    }

    fn label(&self) -> String {
        let density = match (self.m, self.ratio, self.p) {
            (Some(m), _, _) => format!("m={m}"),
            (_, Some(r), _) => format!("ratio={r}"),
            (_, _, Some(p)) => format!("p={p}"),
            _ => String::new(),
        };
        format!("{:?} n={} k={} {density}", self.variant, self.n, self.k).to_lowercase()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub point: usize,
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub variant: String,
    pub scanned: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Generation or analysis error, when any.
    pub error: Option<String>,
    pub solve_success: Option<bool>,
    pub solve_failure: Option<String>,
    pub solve_t: Option<u64>,
    pub majority_disagreement: Option<usize>,
    pub beta: Option<u64>,
    pub frozen_fraction: Option<f64>,
    pub radius: Option<usize>,
    pub entropy: Option<f64>,
    pub core_t: Option<u64>,
    pub core_size: Option<usize>,
    pub satellite_size: Option<usize>,
    pub coverage: Option<f64>,
    pub largest_component: Option<usize>,
    /// `size:count` pairs joined by `;`.
    pub residual_histogram: Option<String>,
    /// `m:rejected` pairs joined by `;`, with `:frozen_fraction` appended.
    pub evolve: Option<String>,
    pub two_step_p: Option<f64>,
    pub gen_ms: f64,
    pub solve_ms: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 28] = [
    "point",
    "trial",
    "seed",
    "n",
    "k",
    "variant",
    "scanned",
    "accepted",
    "rejected",
    "error",
    "solve_success",
    "solve_failure",
    "solve_t",
    "majority_disagreement",
    "beta",
    "frozen_fraction",
    "radius",
    "entropy",
    "core_t",
    "core_size",
    "satellite_size",
    "coverage",
    "largest_component",
    "residual_histogram",
    "evolve",
    "two_step_p",
    "gen_ms",
    "solve_ms",
];

fn cell<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn float(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl ExperimentRow {
    fn csv_record(&self, timings: bool) -> Vec<String> {
        let mut cells = vec![
            self.point.to_string(),
            self.trial.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.variant.clone(),
            self.scanned.to_string(),
            self.accepted.to_string(),
            self.rejected.to_string(),
            self.error.clone().unwrap_or_default(),
            cell(&self.solve_success),
            cell(&self.solve_failure),
            cell(&self.solve_t),
            cell(&self.majority_disagreement),
            cell(&self.beta),
            float(self.frozen_fraction),
            cell(&self.radius),
            float(self.entropy),
            cell(&self.core_t),
            cell(&self.core_size),
            cell(&self.satellite_size),
            float(self.coverage),
            cell(&self.largest_component),
            cell(&self.residual_histogram),
            cell(&self.evolve),
            float(self.two_step_p),
        ];
        if timings {
            cells.push(format!("{:.3}", self.gen_ms));
            cells.push(self.solve_ms.map(|x| format!("{x:.3}")).unwrap_or_default());
        }
        cells
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointAggregate {
    pub point: usize,
    pub label: String,
    pub trials: usize,
    pub errors: usize,
    pub mean_accepted: f64,
    pub mean_rejected: f64,
    /// Successful solves over all trials of the point.
    pub solve_success_rate: Option<f64>,
    pub mean_majority_disagreement_fraction: Option<f64>,
    pub mean_beta: Option<f64>,
    pub mean_frozen_fraction: Option<f64>,
    pub mean_entropy: Option<f64>,
    pub beta_one_rate: Option<f64>,
    pub mean_coverage: Option<f64>,
    pub max_largest_component: Option<usize>,
    pub mean_two_step_p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub master_seed: u64,
    pub rows: Vec<ExperimentRow>,
    pub aggregates: Vec<PointAggregate>,
}

fn mean<I: Iterator<Item = f64>>(it: I) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for x in it {
        sum += x;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

impl ExperimentReport {
    /// CSV with a `# schema` comment line; timing columns last and
    /// optional.
    pub fn to_csv(&self, timings: bool) -> String {
        let cols = if timings {
            &CSV_COLUMNS[..]
        } else {
            &CSV_COLUMNS[..CSV_COLUMNS.len() - TIMING_COLUMNS.len()]
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(cols).expect("writing to memory");
        for r in &self.rows {
            w.write_record(r.csv_record(timings)).expect("writing to memory");
        }
        let body = String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 cells");
        format!("# satprocess experiment schema v{CSV_SCHEMA_VERSION}\n{body}")
    }

    /// Aggregates and metadata; rows are left to the CSV.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": self.schema_version,
            "master_seed": self.master_seed,
            "rows": self.rows.len(),
            "aggregates": self.aggregates,
        })
    }

    pub fn write_outputs(&self, paths: &OutputPaths, timings: bool) -> Result<()> {
        if let Some(p) = &paths.csv {
            std::fs::write(p, self.to_csv(timings))?;
        }
        if let Some(p) = &paths.json {
            let text = serde_json::to_string_pretty(&self.summary_json())
                .map_err(|e| Error::Io(e.to_string()))?;
            std::fs::write(p, text + "\n")?;
        }
        Ok(())
    }
}

fn aggregate(point: usize, label: String, rows: &[&ExperimentRow]) -> PointAggregate {
    let trials = rows.len();
    let has = |f: &dyn Fn(&ExperimentRow) -> bool| rows.iter().any(|r| f(r));
    PointAggregate {
        point,
        label,
        trials,
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        mean_accepted: mean(rows.iter().map(|r| r.accepted as f64)).unwrap_or(0.0),
        mean_rejected: mean(rows.iter().map(|r| r.rejected as f64)).unwrap_or(0.0),
        solve_success_rate: has(&|r| r.solve_success.is_some() || r.error.is_some())
            .then(|| rows.iter().filter(|r| r.solve_success == Some(true)).count() as f64 / trials as f64),
        mean_majority_disagreement_fraction: mean(
            rows.iter()
                .filter_map(|r| r.majority_disagreement.map(|d| d as f64 / r.n as f64)),
        ),
        mean_beta: mean(rows.iter().filter_map(|r| r.beta.map(|b| b as f64))),
        mean_frozen_fraction: mean(rows.iter().filter_map(|r| r.frozen_fraction)),
        mean_entropy: mean(rows.iter().filter_map(|r| r.entropy)),
        beta_one_rate: has(&|r| r.beta.is_some())
            .then(|| rows.iter().filter(|r| r.beta == Some(1)).count() as f64 / trials as f64),
        mean_coverage: mean(rows.iter().filter_map(|r| r.coverage)),
        max_largest_component: rows.iter().filter_map(|r| r.largest_component).max(),
        mean_two_step_p: mean(rows.iter().filter_map(|r| r.two_step_p)),
    }
}

fn run_analyses(
    spec: &ExperimentSpec,
    row: &mut ExperimentRow,
    formula: &Formula,
    trace: &GenerationTrace,
) -> Result<()> {
    let psi: Option<&Assignment> = trace.witness.as_ref();
    let solver_config = {
        let c = SolverConfig::for_formula(formula);
        match &spec.t_sweep {
            Some(s) => c.with_sweep(s.clone()),
            None => c,
        }
    };
    if spec.has(Analysis::Solve) {
        let start = Instant::now();
        let outcome = solve(formula, &solver_config);
        row.solve_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        row.solve_success = Some(outcome.is_success());
        row.solve_failure = outcome.result.as_ref().err().map(ToString::to_string);
        if outcome.is_success() {
            let last = outcome.last().expect("successful attempt");
            row.solve_t = Some(last.t);
            row.majority_disagreement = last.majority_disagreement;
        }
    }
    if spec.has(Analysis::Oracle) {
        let s = summarize_with_limit(formula, 1, spec.oracle_limit)?;
        row.beta = Some(s.beta);
        row.frozen_fraction = Some(s.frozen_fraction());
        row.radius = Some(s.concentration_radius);
        row.entropy = s.entropy;
    }
    if spec.has(Analysis::Core) {
        let psi = psi.ok_or_else(|| Error::Contract("core analysis needs a witness".into()))?;
        let rep = analyze_sweep(formula, psi, &CoreParams::desk(1), &solver_config.thresholds())?;
        row.core_t = Some(rep.t);
        row.core_size = Some(rep.core.len());
        row.satellite_size = Some(rep.satellites.len());
        row.coverage = Some(rep.coverage());
        row.largest_component = Some(rep.largest_component());
        row.residual_histogram = Some(
            rep.component_histogram()
                .iter()
                .map(|(s, c)| format!("{s}:{c}"))
                .collect::<Vec<_>>()
                .join(";"),
        );
    }
    Ok(())
}

fn run_row(spec: &ExperimentSpec, point: usize, trial: usize) -> ExperimentRow {
    let gp = &spec.grid[point];
    let seed = spec.trial_seed(point, trial);
    let mut row = ExperimentRow {
        point,
        trial,
        seed,
        n: gp.n,
        k: gp.k,
        variant: format!("{:?}", gp.variant).to_lowercase(),
        ..Default::default()
    };
    let mut process = match gp.process(seed) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    process.conflict_budget = spec.conflict_budget;
    let start = Instant::now();
    let generated = generate(&process);
    row.gen_ms = start.elapsed().as_secs_f64() * 1e3;
    let (formula, trace) = match generated {
        Ok(x) => x,
        Err(e) => {
            row.error = Some(e.to_string());
            if spec.has(Analysis::Solve) {
                row.solve_success = Some(false);
            }
            return row;
        }
    };
    row.scanned = trace.counts.scanned;
    row.accepted = trace.counts.accepted;
    row.rejected = trace.counts.rejected;
    if let Err(e) = run_analyses(spec, &mut row, &formula, &trace) {
        row.error = Some(e.to_string());
    }
    if spec.has(Analysis::Evolve) && gp.variant == GridVariant::Perm {
        let m_max = process_m(&process);
        let mut snaps: Vec<u64> = spec
            .evolve_ratios
            .iter()
            .map(|r| r * gp.n as u64)
            .filter(|&m| m <= m_max)
            .collect();
        snaps.push(m_max);
        let mut cfg = EvolveConfig::new(gp.n, gp.k, seed, snaps).with_oracle(true);
        cfg.oracle_limit = spec.oracle_limit;
        cfg.conflict_budget = spec.conflict_budget;
        match evolve(&cfg) {
            Ok(snapshots) => {
                row.evolve = Some(
                    snapshots
                        .iter()
                        .map(|s| format!("{}:{}:{}", s.m, s.rejected, float(s.frozen_fraction)))
                        .collect::<Vec<_>>()
                        .join(";"),
                )
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    if spec.has(Analysis::TwoStepTest) {
        let mut cfg = TwoStepTestConfig::standard(derive_seed(seed, &[7]));
        cfg.samples = spec.two_step_samples;
        match two_step_test(&cfg) {
            Ok(r) => row.two_step_p = Some(r.p_value),
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

fn process_m(p: &ProcessConfig) -> u64 {
    match p.variant {
        crate::generator::Variant::Perm { m } | crate::generator::Variant::Planted { m, .. } => m,
        _ => 0,
    }
}

/// Runs every `(point, trial)` row in parallel and merges in row order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let rows: Vec<ExperimentRow> = jobs
        .par_iter()
        .map(|&(p, t)| run_row(spec, p, t))
        .collect();
    let aggregates = (0..spec.grid.len())
        .map(|p| {
            let of_point: Vec<&ExperimentRow> = rows.iter().filter(|r| r.point == p).collect();
            aggregate(p, spec.grid[p].label(), &of_point)
        })
        .collect();
    Ok(ExperimentReport {
        schema_version: CSV_SCHEMA_VERSION,
        master_seed: spec.master_seed,
        rows,
        aggregates,
    })
}

/// Drops the timing columns from CSV produced with timings.
pub fn strip_timing_columns(text: &str) -> Result<String> {
    let (comments, body): (Vec<&str>, Vec<&str>) = text.lines().partition(|l| l.starts_with('#'));
    let body = body.join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(body.as_bytes());
    let mut w = csv::Writer::from_writer(Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let keep = record.len().saturating_sub(TIMING_COLUMNS.len());
        w.write_record(record.iter().take(keep)).map_err(|e| Error::Io(e.to_string()))?;
    }
    let mut out: String = comments.iter().map(|c| format!("{c}\n")).collect();
    out.push_str(&String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
master_seed = 9
trials = 10
analyses = ["solve", "oracle", "core"]

[[grid]]
n = 12
ratio = 5

[[grid]]
n = 12
ratio = 10

[[grid]]
n = 14
ratio = 8
variant = "planted"
"#;

    #[test]
    fn grid_times_trials_rows_in_order() {
        let spec = ExperimentSpec::from_toml(SPEC).unwrap();
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.rows.len(), 30);
        for (i, r) in report.rows.iter().enumerate() {
            assert_eq!((r.point, r.trial), (i / 10, i % 10));
            assert_eq!(r.seed, spec.trial_seed(r.point, r.trial));
            assert!(r.error.is_none(), "{:?}", r.error);
        }
        for a in &report.aggregates {
            let rows: Vec<_> = report.rows.iter().filter(|r| r.point == a.point).collect();
            let successes = rows.iter().filter(|r| r.solve_success == Some(true)).count();
            assert_eq!(a.solve_success_rate, Some(successes as f64 / rows.len() as f64));
        }
    }

    #[test]
    fn rerun_gives_identical_csv() {
        let spec = ExperimentSpec::from_toml(SPEC).unwrap();
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.to_csv(false), b.to_csv(false));
        assert_eq!(strip_timing_columns(&a.to_csv(true)).unwrap(), a.to_csv(false));
    }

    #[test]
    fn row_is_reproducible_alone() {
        let spec = ExperimentSpec::from_toml(SPEC).unwrap();
        let report = run_experiment(&spec).unwrap();
        let again = run_row(&spec, 1, 7);
        assert_eq!(report.rows[17].csv_record(false), again.csv_record(false));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let zero = SPEC.replace("trials = 10", "trials = 0");
        assert!(ExperimentSpec::from_toml(&zero).is_err());
        let big = SPEC.replace("n = 14", "n = 40");
        assert!(matches!(ExperimentSpec::from_toml(&big), Err(Error::Refused(_))));
        let both = SPEC.replace("ratio = 5", "ratio = 5\nm = 60");
        assert!(ExperimentSpec::from_toml(&both).is_err());
    }

    #[test]
    fn generation_failures_are_recorded_per_row() {
        let text = r#"
master_seed = 1
trials = 2
analyses = ["solve"]
conflict_budget = 1

[[grid]]
n = 120
ratio = 10

[[grid]]
n = 10
ratio = 2
"#;
        let report = run_experiment(&ExperimentSpec::from_toml(text).unwrap()).unwrap();
        assert!(report.rows[..2].iter().all(|r| r.error.is_some() && r.solve_success == Some(false)));
        assert_eq!(report.aggregates[0].errors, 2);
        assert_eq!(report.aggregates[0].solve_success_rate, Some(0.0));
        assert!(report.rows[2..].iter().all(|r| r.error.is_none()));
    }
}
