//! Walk through the benchmark registry: domains, fidelity costs, optimum
//! records, and the spread between fidelity levels at random points.
//!
//! `cargo run --release --example benchmark_tour`

use mfbo::benchmarks::SPRING_MASS_DT;
use mfbo::{registry, spring_mass_simulate, RandomStream, SpringMassConfig};

fn main() -> Result<(), mfbo::Error> {
    let mut stream = RandomStream::new(5);
    for f in registry() {
        println!(
            "{} (D = {}, L = {}, costs {:?}, noisy: {})",
            f.name,
            f.dim,
            f.levels,
            f.costs.as_slice(),
            f.noisy
        );
        println!(
            "  optimum f = {} at {:?} ({:?} / {:?}), f_max = {}",
            f.optimum.f, f.optimum.x, f.optimum.x_source, f.optimum.f_source, f.f_max
        );
        let u: Vec<f64> = (0..f.dim).map(|_| stream.uniform()).collect();
        let x = f.from_unit(&u);
        let values = (1..=f.levels)
            .map(|l| f.evaluate_noise_free(l, &x))
            .collect::<Result<Vec<_>, _>>()?;
        println!("  levels at a random point: {values:.4?}");
    }

    let x = [2.0, 3.0, 1.5, 2.5];
    for dt in [SPRING_MASS_DT.0, 0.1, SPRING_MASS_DT.1] {
        let h1 = spring_mass_simulate(&SpringMassConfig::from_point(&x, dt));
        println!("spring-mass h1(t_end) with dt = {dt}: {h1:.6}");
    }
    Ok(())
}
