//! Error metrics, aggregation of trials onto a common budget grid, and
//! artifact files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarks::FidelityFamily;
use crate::engine::TrialTrace;
use crate::error::{Error, Result};

/// Normalized errors of an incumbent after spending `budget`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub budget: f64,
    pub eps_x: f64,
    pub eps_f: f64,
    pub eps_t: f64,
}

impl MetricPoint {
    pub fn new(budget: f64, eps_x: f64, eps_f: f64) -> Self {
        MetricPoint {
            budget,
            eps_x,
            eps_f,
            eps_t: combined_error(eps_x, eps_f),
        }
    }
}

pub fn combined_error(eps_x: f64, eps_f: f64) -> f64 {
    ((eps_x * eps_x + eps_f * eps_f) / 2.0).sqrt()
}

/// Location, value and combined error of the incumbent location `x_hat`
/// (raw domain units). The value error uses the noise-free top level.
pub fn compute_metrics(family: &FidelityFamily, x_hat: &[f64], budget: f64) -> Result<MetricPoint> {
    let eps_x = family.optimum_distance(x_hat) / (family.dim as f64).sqrt();
    let f = family.evaluate_noise_free(family.levels, x_hat)?;
    let f_star = family.optimum.f;
    // Rounded optimum values can sit a hair above the true minimum.
    let eps_f = ((f - f_star) / (family.f_max - f_star)).max(0.0);
    Ok(MetricPoint::new(budget, eps_x, eps_f))
}

/// Median and interquartile band of `ε_t` across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub budget: Vec<f64>,
    pub median: Vec<f64>,
    pub p25: Vec<f64>,
    pub p75: Vec<f64>,
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `ε_t` of a trace at budget `b`, carrying the last record forward.
pub fn eps_t_at(trace: &TrialTrace, b: f64) -> f64 {
    let idx = trace.records.partition_point(|r| r.metrics.budget <= b);
    if idx == 0 {
        trace.initial.metrics.eps_t
    } else {
        trace.records[idx - 1].metrics.eps_t
    }
}

/// Sample every trace on `grid_size` uniformly spaced budgets over
/// `[0, B_max]` and take pointwise percentiles.
pub fn aggregate(traces: &[TrialTrace], grid_size: usize) -> Result<AggregateCurve> {
    let first = traces.first().ok_or(Error::EmptyInput("trial traces"))?;
    let b_max = first.b_max;
    let n = grid_size.max(2);
    let mut curve = AggregateCurve {
        budget: Vec::with_capacity(n),
        median: Vec::with_capacity(n),
        p25: Vec::with_capacity(n),
        p75: Vec::with_capacity(n),
    };
    for i in 0..n {
        let b = b_max * i as f64 / (n - 1) as f64;
        let mut vals: Vec<f64> = traces.iter().map(|t| eps_t_at(t, b)).collect();
        vals.sort_by(f64::total_cmp);
        curve.budget.push(b);
        curve.median.push(percentile(&vals, 0.5));
        curve.p25.push(percentile(&vals, 0.25));
        curve.p75.push(percentile(&vals, 0.75));
    }
    Ok(curve)
}

/// Median `ε_t` across traces at budget `b`.
pub fn median_at(traces: &[TrialTrace], b: f64) -> f64 {
    let mut vals: Vec<f64> = traces.iter().map(|t| eps_t_at(t, b)).collect();
    vals.sort_by(f64::total_cmp);
    percentile(&vals, 0.5)
}

/// Smallest budget at which the median `ε_t` is at most `threshold`. The
/// median is a step function, so only record budgets need checking.
pub fn budget_to_reach(traces: &[TrialTrace], threshold: f64) -> Option<f64> {
    let mut budgets: Vec<f64> = traces
        .iter()
        .flat_map(|t| {
            std::iter::once(t.initial.metrics.budget)
                .chain(t.records.iter().map(|r| r.metrics.budget))
        })
        .collect();
    budgets.sort_by(f64::total_cmp);
    budgets.dedup();
    budgets
        .into_iter()
        .find(|&b| median_at(traces, b) <= threshold)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Per-trial CSV. Row 0 describes the state after the initial design
/// (level 0, the incumbent's location and value).
pub fn trial_csv(trace: &TrialTrace) -> String {
    let dim = trace.initial.incumbent_x.len();
    let mut out = String::from("iteration,budget,level");
    for d in 1..=dim {
        let _ = write!(out, ",x{d}");
    }
    out.push_str(",y,incumbent,eps_x,eps_f,eps_t\n");
    let mut row =
        |it: usize, level: usize, x: &[f64], y: f64, inc: f64, m: &crate::metrics::MetricPoint| {
            let _ = write!(out, "{it},{},{level}", num(m.budget));
            for v in x {
                let _ = write!(out, ",{}", num(*v));
            }
            let _ = writeln!(
                out,
                ",{},{},{},{},{}",
                num(y),
                num(inc),
                num(m.eps_x),
                num(m.eps_f),
                num(m.eps_t)
            );
        };
    let i = &trace.initial;
    row(0, 0, &i.incumbent_x, i.incumbent, i.incumbent, &i.metrics);
    for r in &trace.records {
        row(r.iteration, r.level, &r.x, r.y, r.incumbent, &r.metrics);
    }
    out
}

pub fn aggregate_csv(curve: &AggregateCurve) -> String {
    let mut out = String::from("budget,median,p25,p75\n");
    for i in 0..curve.budget.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(curve.budget[i]),
            num(curve.median[i]),
            num(curve.p25[i]),
            num(curve.p75[i])
        );
    }
    out
}

/// Whitespace-separated `budget median p25 p75` columns for plotting tools.
pub fn plot_data(curve: &AggregateCurve, title: &str) -> String {
    let mut out = format!("# {title}\n# budget median p25 p75\n");
    for i in 0..curve.budget.len() {
        let _ = writeln!(
            out,
            "{:.10e} {:.10e} {:.10e} {:.10e}",
            curve.budget[i], curve.median[i], curve.p25[i], curve.p75[i]
        );
    }
    out
}

fn parse_err(location: String, message: impl Into<String>) -> Error {
    Error::Parse {
        location,
        message: message.into(),
    }
}

pub fn parse_aggregate_csv(text: &str) -> Result<AggregateCurve> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err("line 1".into(), "empty file"))?;
    if header.trim() != "budget,median,p25,p75" {
        return Err(parse_err(
            "line 1".into(),
            format!("unexpected header {header:?}"),
        ));
    }
    let mut c = AggregateCurve {
        budget: Vec::new(),
        median: Vec::new(),
        p25: Vec::new(),
        p75: Vec::new(),
    };
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(format!("line {}", i + 2), e.to_string()))?;
        if vals.len() != 4 {
            return Err(parse_err(format!("line {}", i + 2), "expected 4 columns"));
        }
        c.budget.push(vals[0]);
        c.median.push(vals[1]);
        c.p25.push(vals[2]);
        c.p75.push(vals[3]);
    }
    Ok(c)
}

/// Files written by [`emit`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub trials: Vec<PathBuf>,
    pub aggregate: PathBuf,
    pub manifest: PathBuf,
    pub plot: PathBuf,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Write per-trial CSVs, the aggregate CSV, a JSON manifest and a plot data
/// file into `dir`, all named after `prefix`.
pub fn emit<M: Serialize>(
    curve: &AggregateCurve,
    traces: &[TrialTrace],
    manifest: &M,
    dir: &Path,
    prefix: &str,
) -> Result<EmittedFiles> {
    if traces.is_empty() {
        return Err(Error::EmptyInput("trial traces"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut trials = Vec::with_capacity(traces.len());
    for t in traces {
        let path = dir.join(format!("{prefix}_trial{:02}.csv", t.trial));
        write(&path, &trial_csv(t))?;
        trials.push(path);
    }
    let aggregate = dir.join(format!("{prefix}_aggregate.csv"));
    write(&aggregate, &aggregate_csv(curve))?;
    let manifest_path = dir.join(format!("{prefix}_manifest.json"));
    let json =
        serde_json::to_string_pretty(manifest).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    write(&manifest_path, &(json + "\n"))?;
    let plot = dir.join(format!("{prefix}.dat"));
    write(&plot, &plot_data(curve, prefix))?;
    Ok(EmittedFiles {
        trials,
        aggregate,
        manifest: manifest_path,
        plot,
    })
}
