//! Fit the autoregressive multi-fidelity GP to cheap and expensive Forrester
//! data and compare it with a GP that only sees the expensive points.
//!
//! `cargo run --release --example multi_fidelity_gp`

use mfbo::{fit_gp, fit_mf_gp, lookup, Observation, ObservationSet, RandomStream};

fn main() -> Result<(), mfbo::Error> {
    let family = lookup("forrester")?;
    let mut stream = RandomStream::new(2);
    let mut data = ObservationSet::new();
    for i in 0..11 {
        let x = vec![i as f64 / 10.0];
        let y = family.evaluate(1, &x, &mut stream)?;
        data.push(Observation { x, level: 1, y });
    }
    for x in [0.0, 0.4, 0.6, 1.0] {
        let y = family.evaluate(4, &[x], &mut stream)?;
        // Family level 4 is rank 2 in this two-level model.
        data.push(Observation {
            x: vec![x],
            level: 2,
            y,
        });
    }

    let mf = fit_mf_gp(&data, 2, &mut stream)?;
    let (hx, hy) = data.level_data(2);
    let hf_only = fit_gp(&hx, &hy, &mut stream)?;
    println!("rho = {:.4}", mf.params().rho[0]);
    println!(
        "{:>5} {:>9} {:>9} {:>8} {:>9} {:>8} {:>7}",
        "x", "truth", "mf mean", "mf std", "hf mean", "hf std", "corr"
    );
    for i in 0..=20 {
        let x = [i as f64 / 20.0];
        let truth = family.evaluate_noise_free(4, &x)?;
        let (m, s) = mf.predict_level(&x, 2)?;
        let (hm, hs) = hf_only.predict(&x);
        let corr = mf.posterior_correlation(&x, 1)?;
        println!(
            "{:>5.2} {truth:>9.4} {m:>9.4} {s:>8.4} {hm:>9.4} {hs:>8.4} {corr:>7.3}",
            x[0]
        );
    }
    Ok(())
}
