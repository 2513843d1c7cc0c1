//! Run a small multi-trial experiment through the library, aggregate the
//! trials and write the CSV, manifest and plot files.
//!
//! `cargo run --release --example experiment_artifacts -- out_dir`

use std::path::PathBuf;

use mfbo::cli::{run_prefix, RunManifest};
use mfbo::{aggregate, emit, run_trials, AcquisitionKind, ExperimentConfig};

fn main() -> Result<(), mfbo::Error> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("mfbo-artifacts"));
    let mut cfg = ExperimentConfig::new("alos_d1", AcquisitionKind::Mfei)?;
    cfg.trials = 4;
    cfg.b_max = 20.0;
    cfg.seed = 11;

    let traces = run_trials(&cfg)?;
    let curve = aggregate(&traces, 41)?;
    let files = emit(
        &curve,
        &traces,
        &RunManifest::new(&cfg, 41),
        &dir,
        &run_prefix(&cfg),
    )?;

    println!(
        "{:>8} {:>10} {:>10} {:>10}",
        "budget", "p25", "median", "p75"
    );
    for i in (0..curve.budget.len()).step_by(5) {
        println!(
            "{:>8.2} {:>10.3e} {:>10.3e} {:>10.3e}",
            curve.budget[i], curve.p25[i], curve.median[i], curve.p75[i]
        );
    }
    println!(
        "wrote {} trial files, {}, {} and {}",
        files.trials.len(),
        files.aggregate.display(),
        files.manifest.display(),
        files.plot.display()
    );
    Ok(())
}
