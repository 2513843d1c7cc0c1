//! Fit a single-fidelity GP to nine Forrester evaluations and print
//! the posterior on a grid.
//!
//! `cargo run --release --example gp_regression`

use mfbo::{fit_gp, lookup, RandomStream};

fn main() -> Result<(), mfbo::Error> {
    let family = lookup("forrester")?;
    let mut stream = RandomStream::new(1);
    let inputs: Vec<Vec<f64>> = [0.0, 0.1, 0.3, 0.45, 0.6, 0.7, 0.8, 0.9, 1.0]
        .iter()
        .map(|x| vec![*x])
        .collect();
    let targets = inputs
        .iter()
        .map(|x| family.evaluate(family.levels, x, &mut stream))
        .collect::<Result<Vec<f64>, _>>()?;

    let gp = fit_gp(&inputs, &targets, &mut stream)?;
    let p = gp.params();
    // Hyperparameters live on the standardized target scale.
    println!(
        "lengthscale {:.4}, signal variance {:.4}, noise variance {:.2e}, target scale {:.4}",
        p.lengthscales[0],
        p.signal_variance,
        p.noise_variance,
        gp.scaling().scale
    );
    println!("{:>6} {:>10} {:>10} {:>10}", "x", "truth", "mean", "std");
    for i in 0..=20 {
        let x = i as f64 / 20.0;
        let (mean, std) = gp.predict(&[x]);
        let truth = family.evaluate_noise_free(family.levels, &[x])?;
        println!("{x:>6.2} {truth:>10.4} {mean:>10.4} {std:>10.4}");
    }
    Ok(())
}
