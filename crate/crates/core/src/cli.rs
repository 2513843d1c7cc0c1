//! Command-line front end: `bench`, `suite`, `list` and `verify`.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::acquisition::{MaximizerSettings, MesSettings};
use crate::acquisition_mf::CostSchedule;
use crate::benchmarks::{grid_oracle, lhs_oracle, lookup, registry, FidelityFamily};
use crate::engine::{
    run_trial, AcquisitionKind, ExperimentConfig, RefitSchedule, TrialStatus, TrialTrace,
};
use crate::error::{Error, Result};
use crate::math::RandomStream;
use crate::metrics::{aggregate, budget_to_reach, emit, median_at};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "MFBO_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "mfbo-output";
pub const DEFAULT_AGGREGATE_GRID: usize = 201;
/// Median `ε_t` level reported as "solved" in summaries.
pub const SOLVED_THRESHOLD: f64 = 0.05;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mfbo",
    version,
    about = "Single- and multi-fidelity Bayesian optimization benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the trials of one configuration.
    Bench(BenchArgs),
    /// Run every experiment of a TOML suite file.
    Suite(SuiteArgs),
    /// Print the benchmark registry.
    List,
    /// Check the registry's optimum records against the formulas and grid oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, required_unless_present = "manifest")]
    pub benchmark: Option<String>,
    #[arg(long = "acq", required_unless_present = "manifest")]
    pub acquisition: Option<String>,
    /// Active fidelity levels, e.g. `1,4`.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub initial_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub b_max: Option<f64>,
    /// Cost of every family level, e.g. `0.125,0.25,0.5,1`.
    #[arg(long, value_delimiter = ',')]
    pub costs: Option<Vec<f64>>,
    #[arg(long)]
    pub charge_initial_design: bool,
    #[arg(long)]
    pub candidates_per_dim: Option<usize>,
    /// Rerun the configuration recorded in a manifest.
    #[arg(long, conflicts_with_all = ["benchmark", "acquisition"])]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the suite's `parallelism`.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Nodes of the dense grid oracles.
    #[arg(long, default_value_t = 1_000_000)]
    pub grid_points: usize,
}

/// A resolved set of experiments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSpec {
    pub experiments: Vec<ExperimentConfig>,
    pub output_dir: Option<PathBuf>,
    pub parallelism: usize,
    pub aggregate_grid: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    output_dir: Option<PathBuf>,
    parallelism: Option<usize>,
    aggregate_grid: Option<usize>,
    seed: Option<u64>,
    trials: Option<usize>,
    #[serde(default, rename = "experiment")]
    experiments: Vec<RawExperiment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    benchmark: String,
    acquisition: String,
    levels: Option<Vec<usize>>,
    initial_sizes: Option<Vec<usize>>,
    b_max: Option<f64>,
    trials: Option<usize>,
    seed: Option<u64>,
    costs: Option<Vec<f64>>,
    charge_initial_design: Option<bool>,
    mes: Option<MesSettings>,
    maximizer: Option<MaximizerSettings>,
    refit: Option<RefitSchedule>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse a suite file. See the README for the grammar.
pub fn parse_config(path: &Path) -> Result<SuiteSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}

/// Parse suite text; `origin` prefixes error locations.
pub fn parse_config_str(text: &str, origin: &str) -> Result<SuiteSpec> {
    let raw: RawSuite = toml::from_str(text).map_err(|e| Error::Parse {
        location: match e.span() {
            Some(span) => format!("{origin}:{}", line_of(text, span.start)),
            None => origin.to_string(),
        },
        message: e.message().to_string(),
    })?;
    if raw.experiments.is_empty() {
        return Err(Error::Parse {
            location: origin.to_string(),
            message: "no [[experiment]] tables".into(),
        });
    }
    let mut seen = HashSet::new();
    let mut experiments = Vec::with_capacity(raw.experiments.len());
    for (i, e) in raw.experiments.into_iter().enumerate() {
        let at = |field: &str| format!("{origin}: experiment[{i}].{field}");
        let acquisition: AcquisitionKind = e.acquisition.parse()?;
        let mut cfg = ExperimentConfig::new(&e.benchmark, acquisition)?;
        let dim = lookup(&e.benchmark)?.dim;
        if let Some(levels) = e.levels {
            cfg.set_levels(levels, dim);
        }
        if let Some(n) = e.initial_sizes {
            cfg.initial_sizes = n;
        }
        if let Some(c) = e.costs {
            CostSchedule::new(c.clone()).map_err(|err| Error::Parse {
                location: at("costs"),
                message: err.to_string(),
            })?;
            cfg.costs = Some(c);
        }
        cfg.b_max = e.b_max.unwrap_or(cfg.b_max);
        cfg.trials = e.trials.or(raw.trials).unwrap_or(cfg.trials);
        cfg.seed = e.seed.or(raw.seed).unwrap_or(cfg.seed);
        cfg.charge_initial_design = e.charge_initial_design.unwrap_or(false);
        cfg.mes = e.mes.unwrap_or(cfg.mes);
        cfg.maximizer = e.maximizer.unwrap_or(cfg.maximizer);
        cfg.refit = e.refit.unwrap_or(cfg.refit);
        cfg.resolve().map_err(|err| match err {
            Error::InvalidConfig(message) => Error::Parse {
                location: format!("{origin}: experiment[{i}]"),
                message,
            },
            other => other,
        })?;
        if !seen.insert(run_prefix(&cfg)) {
            return Err(Error::Parse {
                location: format!("{origin}: experiment[{i}]"),
                message: format!("duplicate experiment {}", run_prefix(&cfg)),
            });
        }
        experiments.push(cfg);
    }
    Ok(SuiteSpec {
        experiments,
        output_dir: raw.output_dir,
        parallelism: raw.parallelism.unwrap_or(1).max(1),
        aggregate_grid: raw.aggregate_grid.unwrap_or(DEFAULT_AGGREGATE_GRID).max(2),
    })
}

/// File name stem of a configuration's artifacts.
pub fn run_prefix(cfg: &ExperimentConfig) -> String {
    let levels: Vec<String> = cfg.levels.iter().map(|l| l.to_string()).collect();
    format!(
        "{}_{}_l{}",
        cfg.benchmark,
        cfg.acquisition,
        levels.join("-")
    )
}

/// Trial-level seeding recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSeed {
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
}

/// Everything needed to rerun a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub library: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub aggregate_grid: usize,
    pub trials: Vec<TrialSeed>,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, aggregate_grid: usize) -> Self {
        RunManifest {
            library: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            aggregate_grid,
            trials: (0..config.trials)
                .map(|t| TrialSeed {
                    trial: t,
                    seed: config.seed,
                    stream: t as u64,
                })
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: format!("{}:{}", path.display(), e.line()),
            message: e.to_string(),
        })?;
        m.config.resolve()?;
        Ok(m)
    }
}

/// Outcome of one configuration of a suite.
#[derive(Debug, Clone)]
pub struct ConfigResult {
    pub config: ExperimentConfig,
    pub traces: Vec<TrialTrace>,
    pub final_median: f64,
    pub budget_to_solve: Option<f64>,
}

/// Run every `(configuration, trial)` pair on `jobs` worker threads. The
/// result does not depend on `jobs`.
pub fn run_configs(
    configs: &[ExperimentConfig],
    jobs: usize,
    progress: bool,
) -> Result<Vec<Vec<TrialTrace>>> {
    let work: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(c, cfg)| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let slots: Mutex<Vec<Option<Result<TrialTrace>>>> =
        Mutex::new((0..work.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, work.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(c, t)) = work.get(i) else { break };
                let res = run_trial(&configs[c], t);
                if progress {
                    let k = done.fetch_add(1, Ordering::SeqCst) + 1;
                    eprintln!("[{k}/{}] {} trial {t}", work.len(), run_prefix(&configs[c]));
                }
                slots.lock().expect("no worker panicked")[i] = Some(res);
            });
        }
    });
    let mut out: Vec<Vec<TrialTrace>> = configs.iter().map(|_| Vec::new()).collect();
    for (slot, &(c, _)) in slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .zip(&work)
    {
        out[c].push(slot.expect("every job ran")?);
    }
    Ok(out)
}

/// Run a suite, write its artifacts into `out_dir` and return per-config
/// results. Trials that failed mid-run still get their artifacts written.
pub fn execute_suite(
    suite: &SuiteSpec,
    out_dir: &Path,
    jobs: usize,
    progress: bool,
) -> Result<Vec<ConfigResult>> {
    let all = run_configs(&suite.experiments, jobs, progress)?;
    let mut results = Vec::with_capacity(all.len());
    for (cfg, traces) in suite.experiments.iter().zip(all) {
        let curve = aggregate(&traces, suite.aggregate_grid)?;
        emit(
            &curve,
            &traces,
            &RunManifest::new(cfg, suite.aggregate_grid),
            out_dir,
            &run_prefix(cfg),
        )?;
        results.push(ConfigResult {
            config: cfg.clone(),
            final_median: median_at(&traces, cfg.b_max),
            budget_to_solve: budget_to_reach(&traces, SOLVED_THRESHOLD),
            traces,
        });
    }
    Ok(results)
}

/// Final median `ε_t` per configuration, with the best and second best
/// configuration of each benchmark marked.
pub fn summary_table(results: &[ConfigResult]) -> String {
    let mut rank = vec![""; results.len()];
    let mut benchmarks: Vec<&str> = results
        .iter()
        .map(|r| r.config.benchmark.as_str())
        .collect();
    benchmarks.dedup();
    for b in benchmarks {
        let mut idx: Vec<usize> = (0..results.len())
            .filter(|&i| results[i].config.benchmark == b)
            .collect();
        idx.sort_by(|&i, &j| results[i].final_median.total_cmp(&results[j].final_median));
        if idx.len() > 1 {
            rank[idx[0]] = "best";
            rank[idx[1]] = "second";
        }
    }
    let mut out = format!(
        "{:<16} {:<6} {:<9} {:>6} {:>10} {:>14} {:>8}  {}\n",
        "benchmark", "acq", "levels", "trials", "B_max", "median eps_t", "B(.05)", "rank"
    );
    for (r, rank) in results.iter().zip(rank) {
        let c = &r.config;
        let levels: Vec<String> = c.levels.iter().map(|l| l.to_string()).collect();
        let failed = r
            .traces
            .iter()
            .filter(|t| matches!(t.status, TrialStatus::Failed { .. }))
            .count();
        let _ = writeln!(
            out,
            "{:<16} {:<6} {:<9} {:>6} {:>10} {:>14.4e} {:>8}  {}{}",
            c.benchmark,
            c.acquisition.to_string(),
            levels.join(","),
            c.trials,
            c.b_max,
            r.final_median,
            r.budget_to_solve
                .map_or("-".to_string(), |b| format!("{b:.2}")),
            rank,
            if failed > 0 {
                format!(" ({failed} failed)")
            } else {
                String::new()
            }
        );
    }
    out
}

fn domain_label(f: &FidelityFamily) -> String {
    let same = f.lower.iter().all(|v| *v == f.lower[0]) && f.upper.iter().all(|v| *v == f.upper[0]);
    if same {
        let base = format!("[{}, {}]", f.lower[0], f.upper[0]);
        if f.dim > 1 {
            format!("{base}^{}", f.dim)
        } else {
            base
        }
    } else {
        let parts: Vec<String> = f
            .lower
            .iter()
            .zip(&f.upper)
            .map(|(a, b)| format!("[{a}, {b}]"))
            .collect();
        parts.join("x")
    }
}

fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// One line per registry entry.
pub fn list_registry() -> String {
    let mut out = format!(
        "{:<16} {:>2} {:>2} {:<22} {:<28} {:>13} {:>13}  {}\n",
        "name", "D", "L", "domain", "costs", "f*", "f_max", "x*"
    );
    for f in registry() {
        let costs: Vec<String> = f.costs.as_slice().iter().map(|c| format!("{c}")).collect();
        let _ = writeln!(
            out,
            "{:<16} {:>2} {:>2} {:<22} {:<28} {:>13.7} {:>13.7}  {}",
            f.name,
            f.dim,
            f.levels,
            domain_label(&f),
            costs.join(","),
            f.optimum.f,
            f.f_max,
            fmt_point(&f.optimum.x)
        );
    }
    out
}

/// Outcome of one registry self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub family: String,
    pub check: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Tolerance for comparing optimum records with formula values.
pub const VERIFY_TOLERANCE: f64 = 1e-3;
/// Families whose optimum records are cross-checked with a dense grid.
pub const GRID_CHECKED: [&str; 3] = ["jump_forrester", "alos_d2", "alos_d3"];

/// Registry self-checks: each optimum record against the noise-free
/// formula, dense-grid oracles for the families with doubtful records, and
/// `f_max` against a Latin hypercube sample.
pub fn verify_registry(grid_points: usize) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut stream = RandomStream::new(0x5eed);
    for f in registry() {
        let value = f.evaluate_noise_free(f.levels, &f.optimum.x);
        checks.push(match value {
            Ok(v) => Check {
                family: f.name.clone(),
                check: "optimum",
                passed: (v - f.optimum.f).abs() <= VERIFY_TOLERANCE,
                detail: format!(
                    "f({}) = {v:.7}, record {:.7}",
                    fmt_point(&f.optimum.x),
                    f.optimum.f
                ),
            },
            Err(e) => Check {
                family: f.name.clone(),
                check: "optimum",
                passed: false,
                detail: e.to_string(),
            },
        });
        if GRID_CHECKED.contains(&f.name.as_str()) {
            let o = grid_oracle(&f, grid_points);
            let delta = o.min - f.optimum.f;
            checks.push(Check {
                family: f.name.clone(),
                check: "grid oracle",
                passed: delta.abs() <= VERIFY_TOLERANCE,
                detail: format!(
                    "grid min {:.7} at {}, record {:.7}, difference {delta:+.2e}",
                    o.min,
                    fmt_point(&o.argmin),
                    f.optimum.f
                ),
            });
        }
        let o = lhs_oracle(&f, 20_000, &mut stream);
        let slack = 1e-9 * f.f_max.abs().max(1.0);
        checks.push(Check {
            family: f.name.clone(),
            check: "f_max",
            passed: o.max <= f.f_max + slack && o.min >= f.optimum.f - VERIFY_TOLERANCE,
            detail: format!(
                "sampled range [{:.7}, {:.7}] within [{:.7}, {:.7}]",
                o.min, o.max, f.optimum.f, f.f_max
            ),
        });
    }
    checks
}

fn output_dir(flag: Option<PathBuf>, file: Option<PathBuf>) -> PathBuf {
    flag.or(file)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn bench_suite(args: &BenchArgs) -> Result<SuiteSpec> {
    if let Some(path) = &args.manifest {
        let m = RunManifest::load(path)?;
        return Ok(SuiteSpec {
            experiments: vec![m.config],
            output_dir: None,
            parallelism: 1,
            aggregate_grid: m.aggregate_grid,
        });
    }
    let benchmark = args
        .benchmark
        .as_deref()
        .expect("clap requires --benchmark");
    let acquisition: AcquisitionKind = args
        .acquisition
        .as_deref()
        .expect("clap requires --acq")
        .parse()?;
    let family = lookup(benchmark)?;
    let mut cfg = ExperimentConfig::new(benchmark, acquisition)?;
    if let Some(l) = &args.levels {
        cfg.set_levels(l.clone(), family.dim);
    }
    if let Some(n) = &args.initial_sizes {
        cfg.initial_sizes = n.clone();
    }
    cfg.trials = args.trials.unwrap_or(cfg.trials);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.b_max = args.b_max.unwrap_or(cfg.b_max);
    cfg.costs = args.costs.clone();
    cfg.charge_initial_design = args.charge_initial_design;
    if let Some(c) = args.candidates_per_dim {
        cfg.maximizer.candidates_per_dim = c;
    }
    cfg.resolve()?;
    Ok(SuiteSpec {
        experiments: vec![cfg],
        output_dir: None,
        parallelism: args.jobs,
        aggregate_grid: DEFAULT_AGGREGATE_GRID,
    })
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidConfig(_)
            | Error::Parse { .. }
            | Error::UnknownBenchmark(_)
            | Error::UnknownAcquisition(_)
    )
}

fn run_suite_and_report(
    suite: &SuiteSpec,
    dir: &Path,
    jobs: usize,
    out: &mut dyn Write,
) -> Result<bool> {
    let results = execute_suite(suite, dir, jobs, true)?;
    let _ = write!(out, "{}", summary_table(&results));
    let _ = writeln!(out, "artifacts written to {}", dir.display());
    let failed: Vec<String> = results
        .iter()
        .flat_map(|r| {
            r.traces.iter().filter_map(move |t| match &t.status {
                TrialStatus::Failed { message } => Some(format!(
                    "{} trial {}: {message}",
                    run_prefix(&r.config),
                    t.trial
                )),
                _ => None,
            })
        })
        .collect();
    for f in &failed {
        let _ = writeln!(out, "failed: {f}");
    }
    Ok(failed.is_empty())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::List => {
            let _ = write!(out, "{}", list_registry());
            Ok(EXIT_OK)
        }
        Command::Verify(v) => {
            let checks = verify_registry(v.grid_points);
            for c in &checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(
                    out,
                    "{verdict} {:<16} {:<12} {}",
                    c.family, c.check, c.detail
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            let _ = writeln!(out, "{} checks, {failed} failed", checks.len());
            Ok(if failed == 0 { EXIT_OK } else { EXIT_RUNTIME })
        }
        Command::Bench(args) => {
            let suite = bench_suite(&args)?;
            let dir = output_dir(args.out.clone(), None);
            let ok = run_suite_and_report(&suite, &dir, args.jobs, out)?;
            Ok(if ok { EXIT_OK } else { EXIT_RUNTIME })
        }
        Command::Suite(args) => {
            let suite = parse_config(&args.config)?;
            let dir = output_dir(args.out.clone(), suite.output_dir.clone());
            let jobs = args.jobs.unwrap_or(suite.parallelism);
            let ok = run_suite_and_report(&suite, &dir, jobs, out)?;
            Ok(if ok { EXIT_OK } else { EXIT_RUNTIME })
        }
    }
}

/// Parse `args` (including the program name), run the command and return
/// the exit code: 0 on success, 1 for usage errors, 2 for runtime failures.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if is_usage_error(&e) {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("mfbo").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn list_prints_every_family() {
        let (code, out, _) = run_capture(&["list"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 12);
        assert!(out.contains("rosenbrock_d10") && out.contains("[-2, 2]^10"));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_capture(&["frobnicate"]).0, 1);
        assert_eq!(run_capture(&["bench", "--benchmark", "forrester"]).0, 1);
        let (code, _, err) = run_capture(&["bench", "--benchmark", "nope", "--acq", "ei"]);
        assert_eq!(code, 1);
        assert!(err.contains("unknown benchmark"));
        assert_eq!(
            run_capture(&["bench", "--benchmark", "forrester", "--acq", "ucb"]).0,
            1
        );
        assert_eq!(
            run_capture(&[
                "bench",
                "--benchmark",
                "forrester",
                "--acq",
                "mfei",
                "--levels",
                "4"
            ])
            .0,
            1
        );
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn minimal_config_materializes_defaults() {
        let s = parse_config_str(
            "[[experiment]]\nbenchmark = \"forrester\"\nacquisition = \"mfei\"\n",
            "t.toml",
        )
        .unwrap();
        let c = &s.experiments[0];
        assert_eq!((c.b_max, c.trials, c.seed), (100.0, 10, 0));
        assert_eq!(c.initial_sizes, vec![6, 6, 6, 3]);
        assert_eq!(c.costs, None);
        assert_eq!(
            (s.parallelism, s.aggregate_grid),
            (1, DEFAULT_AGGREGATE_GRID)
        );
    }

    #[test]
    fn cost_override_and_validation() {
        let text = "seed = 4\n[[experiment]]\nbenchmark = \"jump_forrester\"\nacquisition = \"mfpi\"\ncosts = [0.5, 1.0]\n";
        let s = parse_config_str(text, "t.toml").unwrap();
        assert_eq!(s.experiments[0].costs, Some(vec![0.5, 1.0]));
        assert_eq!(s.experiments[0].seed, 4);
        let m = serde_json::to_string(&RunManifest::new(&s.experiments[0], 11)).unwrap();
        assert!(m.contains("\"costs\":[0.5,1.0]"));
        let bad = text.replace("[0.5, 1.0]", "[1.0, 0.5]");
        let e = parse_config_str(&bad, "t.toml").unwrap_err();
        assert!(
            matches!(&e, Error::Parse { location, .. } if location.ends_with("experiment[0].costs")),
            "{e}"
        );
    }

    #[test]
    fn parse_errors_carry_context() {
        let e = parse_config_str(
            "[[experiment]]\nbenchmark = \"forrester\"\nacquisition = 3\n",
            "s.toml",
        )
        .unwrap_err();
        assert!(
            matches!(&e, Error::Parse { location, .. } if location == "s.toml:3"),
            "{e}"
        );
        let e = parse_config_str(
            "[[experiment]]\nbenchmark = \"x\"\nacquisition = \"ei\"\n",
            "s.toml",
        )
        .unwrap_err();
        assert!(matches!(e, Error::UnknownBenchmark(_)));
        let e = parse_config_str(
            "[[experiment]]\nbenchmark = \"forrester\"\nacquisition = \"ucb\"\n",
            "s.toml",
        )
        .unwrap_err();
        assert!(matches!(e, Error::UnknownAcquisition(_)));
        let dup = "[[experiment]]\nbenchmark = \"forrester\"\nacquisition = \"ei\"\n".repeat(2);
        assert!(matches!(
            parse_config_str(&dup, "s.toml"),
            Err(Error::Parse { .. })
        ));
        assert!(parse_config_str("bogus = 1\n", "s.toml").is_err());
    }

    fn tiny(acq: AcquisitionKind, trials: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new("forrester", acq).unwrap();
        c.b_max = 3.0;
        c.trials = trials;
        c.maximizer.candidates_per_dim = 100;
        c.refit.restarts = 2;
        c
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let configs = vec![tiny(AcquisitionKind::Ei, 2), tiny(AcquisitionKind::Mfpi, 2)];
        let a = run_configs(&configs, 1, false).unwrap();
        let b = run_configs(&configs, 3, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn manifest_replay_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let suite = SuiteSpec {
            experiments: vec![tiny(AcquisitionKind::Mfei, 2)],
            output_dir: None,
            parallelism: 1,
            aggregate_grid: 21,
        };
        let first = dir.path().join("a");
        execute_suite(&suite, &first, 1, false).unwrap();
        let prefix = run_prefix(&suite.experiments[0]);
        let manifest = first.join(format!("{prefix}_manifest.json"));
        let second = dir.path().join("b");
        let (code, out, err) = run_capture(&[
            "bench",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{out}{err}");
        for t in 0..2 {
            let name = format!("{prefix}_trial{t:02}.csv");
            assert_eq!(
                std::fs::read(first.join(&name)).unwrap(),
                std::fs::read(second.join(&name)).unwrap()
            );
        }
        assert_eq!(
            std::fs::read(&manifest).unwrap(),
            std::fs::read(second.join(format!("{prefix}_manifest.json"))).unwrap()
        );
    }

    #[test]
    fn summary_marks_best_and_second() {
        let configs = vec![
            tiny(AcquisitionKind::Ei, 1),
            tiny(AcquisitionKind::Pi, 1),
            tiny(AcquisitionKind::Mfei, 1),
        ];
        let suite = SuiteSpec {
            experiments: configs,
            output_dir: None,
            parallelism: 1,
            aggregate_grid: 11,
        };
        let dir = tempfile::tempdir().unwrap();
        let res = execute_suite(&suite, dir.path(), 2, false).unwrap();
        let table = summary_table(&res);
        assert_eq!(table.matches("best").count(), 1);
        assert_eq!(table.matches("second").count(), 1);
        assert_eq!(table.lines().count(), 4);
    }

    #[test]
    fn output_dir_precedence() {
        assert_eq!(
            output_dir(Some("x".into()), Some("y".into())),
            PathBuf::from("x")
        );
        assert_eq!(output_dir(None, Some("y".into())), PathBuf::from("y"));
    }
}
