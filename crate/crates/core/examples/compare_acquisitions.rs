//! Run several acquisitions on one benchmark and compare their median
//! convergence.
//!
//! `cargo run --release --example compare_acquisitions -- forrester ei,pi,mes,mfei,mfei@1,4 10`
//!
//! An `@` suffix restricts a multi-fidelity acquisition to the listed levels.

use std::time::Instant;

use mfbo::metrics::median_at;
use mfbo::{budget_to_reach, run_trials, AcquisitionKind, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let benchmark = args.first().map(String::as_str).unwrap_or("forrester");
    let spec = args.get(1).map(String::as_str).unwrap_or("ei,mfei");
    let trials: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(10);

    let mut runs: Vec<(String, ExperimentConfig)> = Vec::new();
    for item in spec.split(',') {
        if let Ok(level) = item.parse::<usize>() {
            // Continuation of an `@` level list.
            let (_, cfg) = runs.last_mut().ok_or("level list without acquisition")?;
            let mut levels = cfg.levels.clone();
            levels.push(level);
            let dim = mfbo::lookup(benchmark)?.dim;
            cfg.set_levels(levels, dim);
            runs.last_mut().unwrap().0.push_str(&format!(",{level}"));
            continue;
        }
        let (name, levels) = match item.split_once('@') {
            Some((n, l)) => (n, Some(l.parse::<usize>()?)),
            None => (item, None),
        };
        let kind: AcquisitionKind = name.parse()?;
        let mut cfg = ExperimentConfig::new(benchmark, kind)?;
        cfg.trials = trials;
        if let Some(l) = levels {
            cfg.set_levels(vec![l], mfbo::lookup(benchmark)?.dim);
        }
        runs.push((item.to_string(), cfg));
    }

    println!(
        "{:<14} {:>10} {:>14} {:>10}",
        "acquisition", "seconds", "B(eps_t<=.05)", "final"
    );
    for (label, cfg) in &runs {
        let start = Instant::now();
        let traces = run_trials(cfg)?;
        let reach =
            budget_to_reach(&traces, 0.05).map_or("never".to_string(), |b| format!("{b:.3}"));
        println!(
            "{:<14} {:>10.1} {:>14} {:>10.3e}",
            label,
            start.elapsed().as_secs_f64(),
            reach,
            median_at(&traces, cfg.b_max)
        );
    }
    Ok(())
}
