//! Drive the engine step by step on one configuration and print each query.
//!
//! `cargo run --release --example single_trial -- forrester mfei 0`

use std::time::Instant;

use mfbo::{AcquisitionKind, Engine, Error, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let benchmark = args.first().map(String::as_str).unwrap_or("forrester");
    let acq: AcquisitionKind = args.get(1).map(String::as_str).unwrap_or("mfei").parse()?;
    let trial: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(0);

    let cfg = ExperimentConfig::new(benchmark, acq)?;
    let start = Instant::now();
    let mut engine = Engine::new(&cfg, trial)?;
    let init = engine.initial_state()?;
    println!(
        "{benchmark} {acq} trial {trial}: {} initial points, eps_t {:.3e}",
        engine.data().len(),
        init.metrics.eps_t
    );
    println!(
        "{:>5} {:>9} {:>5} {:>14} {:>10} {:>8}",
        "iter", "budget", "level", "incumbent", "eps_t", "secs"
    );
    loop {
        match engine.step() {
            Ok(r) => println!(
                "{:>5} {:>9.3} {:>5} {:>14.6} {:>10.3e} {:>8.1}",
                r.iteration,
                r.metrics.budget,
                r.level,
                r.incumbent,
                r.metrics.eps_t,
                start.elapsed().as_secs_f64()
            ),
            Err(Error::BudgetExhausted { spent, .. }) => {
                println!("budget exhausted at {spent:.3}");
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
