//! Evaluate the single- and multi-fidelity acquisitions of a fitted model on
//! a grid and report where each one would query next.
//!
//! `cargo run --release --example acquisition_landscape`

use mfbo::{
    expected_improvement, fit_gp, fit_mf_gp, lookup, max_value_entropy_search,
    maximize_acquisition, maximize_mf_acquisition, probability_of_improvement, sample_min_values,
    sample_min_values_mf, Incumbent, MaximizerSettings, MesSettings, MfAcquisition, MfKind,
    Observation, ObservationSet, RandomStream,
};

fn main() -> Result<(), mfbo::Error> {
    let family = lookup("forrester")?;
    let mut stream = RandomStream::new(3);
    let hf_x = [0.05, 0.3, 0.55, 0.95];
    let inputs: Vec<Vec<f64>> = hf_x.iter().map(|x| vec![*x]).collect();
    let targets = inputs
        .iter()
        .map(|x| family.evaluate_noise_free(4, x))
        .collect::<Result<Vec<_>, _>>()?;
    let gp = fit_gp(&inputs, &targets, &mut stream)?;
    let inc = Incumbent::from_posterior(&gp).expect("data is not empty");
    let mes = MesSettings::for_dim(1);
    let minvals = sample_min_values(&gp, &mes, &mut stream);

    println!("{:>5} {:>10} {:>10} {:>10}", "x", "EI", "PI", "MES");
    for i in 0..=20 {
        let x = [i as f64 / 20.0];
        println!(
            "{:>5.2} {:>10.4e} {:>10.4e} {:>10.4e}",
            x[0],
            expected_improvement(&gp, &inc, &x),
            probability_of_improvement(&gp, &inc, &x),
            max_value_entropy_search(&gp, &minvals, &x)
        );
    }
    let settings = MaximizerSettings::default();
    let (x, v) = maximize_acquisition(
        &|x: &[f64]| expected_improvement(&gp, &inc, x),
        &[0.0],
        &[1.0],
        &settings,
        &mut stream,
    );
    println!("EI maximizer: x = {:.5}, EI = {v:.5e}", x[0]);

    // Add cheap level-1 data and let the multi-fidelity criteria pick a level.
    let mut data = ObservationSet::new();
    for i in 0..8 {
        let x = vec![i as f64 / 7.0];
        let y = family.evaluate_noise_free(1, &x)?;
        data.push(Observation { x, level: 1, y });
    }
    for (x, y) in inputs.iter().zip(&targets) {
        data.push(Observation {
            x: x.clone(),
            level: 2,
            y: *y,
        });
    }
    let mf = fit_mf_gp(&data, 2, &mut stream)?;
    let costs = family.costs.subset(&[1, 4])?;
    let mf_minvals = sample_min_values_mf(&mf, &mes, &mut stream);
    for kind in [MfKind::Ei, MfKind::Pi, MfKind::Mes] {
        let acq = MfAcquisition {
            kind,
            posterior: &mf,
            costs: &costs,
            incumbent: inc.value,
            minvals: &mf_minvals,
        };
        let rec = maximize_mf_acquisition(&acq, &[0.0], &[1.0], &settings, &mut stream);
        println!(
            "MF{kind:?}: x = {:.5}, level {}, score {:.4e}",
            rec.x[0], rec.level, rec.score
        );
    }
    Ok(())
}
