//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`cargo test --release --test acceptance`). The
//! process exits 0 even when a criterion fails, so that known failures stay
//! visible without breaking the workspace test run; set
//! `MFBO_ACCEPTANCE_STRICT=1` to turn any failure into a nonzero exit.

use std::path::Path;
use std::time::{Duration, Instant};

use mfbo::acquisition::{ei_from_moments, ei_gradient, pi_from_moments, pi_gradient};
use mfbo::benchmarks::SPRING_MASS_T_END;
use mfbo::cli::{self, verify_registry};
use mfbo::math::spd_factor;
use mfbo::metrics::{combined_error, median_at};
use mfbo::{
    budget_to_reach, compute_metrics, expected_improvement, fit_gp, lookup,
    max_value_entropy_search, mf_kernel_eval, mfei, mfmes, mfpi, probability_of_improvement,
    registry, run_trial_with, sample_min_values, AcquisitionKind, CostSchedule, ExperimentConfig,
    GpPosterior, Incumbent, KernelParams, MfGpPosterior, MfKernelParams, Observation,
    ObservationSet, RandomStream, SpringMassConfig, TrialStatus, TrialTrace,
};

const FD_STATES: usize = 10_000;
const FD_REL_TOL: f64 = 1e-5;
/// Finite-difference step relative to sigma.
const FD_STEP: f64 = 2e-3;
const REDUCTION_TOL: f64 = 1e-10;
const RECORD_TOL: f64 = 1e-3;
const GRID_POINTS: usize = 1_000_000;
const INTERP_TOL: f64 = 1e-6;
const RECOVERY_FACTOR: f64 = 2.0;
const PSD_REL_TOL: f64 = 1e-8;
const RK4_RATIO: f64 = 16.0;
const RK4_RATIO_SPREAD: f64 = 0.2;
const SOLVED: f64 = 0.05;
const SUBCRITERION_LIMIT: Duration = Duration::from_secs(15 * 60);
const IDENTITY_TOL: f64 = 1e-12;
/// Runtime limits of criteria 1, 2, 3 and 5 in seconds.
const TIME_LIMITS: [(usize, f64); 4] = [(1, 5.0), (2, 10.0), (3, 120.0), (5, 10.0)];
/// Printed optimum values are rounded, which leaves a small `ε_f` at the
/// exact optimum location (largest case: ALOS 1-D, about 1.1e-6).
const OPTIMUM_EPS_F_TOL: f64 = 1e-5;
/// The distance to the Paciorek optimal curves comes from a numerical solve.
const OPTIMUM_EPS_X_TOL: f64 = 1e-12;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Fourth-order central difference.
fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn criterion_1() -> Outcome {
    let mut s = RandomStream::new(101);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < FD_STATES {
        let mu = s.uniform_in(-3.0, 3.0);
        let sigma = s.uniform_in(0.05, 5.0);
        let best = s.uniform_in(-3.0, 3.0);
        // Far tails have derivatives below the finite-difference noise floor.
        if ((best - mu) / sigma).abs() > 5.0 {
            continue;
        }
        n += 1;
        // Steps scale with sigma so the stencil spans a fixed width in I.
        let h = FD_STEP * sigma;
        let (ei_mu, ei_sigma) = ei_gradient(mu, sigma, best);
        let (pi_mu, pi_sigma) = pi_gradient(mu, sigma, best);
        for (a, b) in [
            (
                ei_mu,
                central_diff(|m| ei_from_moments(m, sigma, best), mu, h),
            ),
            (
                ei_sigma,
                central_diff(|t| ei_from_moments(mu, t, best), sigma, h),
            ),
            (
                pi_mu,
                central_diff(|m| pi_from_moments(m, sigma, best), mu, h),
            ),
            (
                pi_sigma,
                central_diff(|t| pi_from_moments(mu, t, best), sigma, h),
            ),
        ] {
            worst = worst.max(rel_err(a, b));
        }
    }
    outcome(
        worst <= FD_REL_TOL,
        format!("{FD_STATES} states, worst relative error {worst:.2e}"),
    )
}

fn random_posteriors(
    seed: u64,
    dim: usize,
    n: usize,
) -> (GpPosterior, MfGpPosterior, KernelParams) {
    let mut s = RandomStream::new(seed);
    let lengthscales = (0..dim).map(|_| s.uniform_in(0.1, 0.6)).collect();
    let p = KernelParams::new(lengthscales, s.uniform_in(0.5, 3.0), 1e-10);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| s.uniform()).collect())
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| v.iter().map(|c| (5.0 * c).sin()).sum::<f64>() + 0.3 * s.normal())
        .collect();
    let gp = GpPosterior::new(x.clone(), y.clone(), p.clone()).unwrap();
    let data = ObservationSet::from_observations(
        x.iter()
            .zip(&y)
            .map(|(x, &y)| Observation {
                x: x.clone(),
                level: 1,
                y,
            })
            .collect(),
    );
    let mf = MfGpPosterior::new(&data, MfKernelParams::single(p.clone())).unwrap();
    (gp, mf, p)
}

fn criterion_2() -> Outcome {
    let costs = CostSchedule::uniform_single();
    let mut worst = [0.0f64; 3];
    let mut s = RandomStream::new(202);
    for (k, (dim, n)) in [(1, 8), (2, 15), (3, 25), (2, 40)].into_iter().enumerate() {
        let (gp, mf, p) = random_posteriors(900 + k as u64, dim, n);
        let inc = Incumbent::from_posterior(&gp).unwrap();
        let minvals = sample_min_values(&gp, &mfbo::MesSettings::for_dim(dim), &mut s);
        for _ in 0..500 {
            let x: Vec<f64> = (0..dim).map(|_| s.uniform()).collect();
            let eta3: f64 = gp
                .inputs()
                .iter()
                .map(|xi| 1.0 - p.correlation(&x, xi))
                .product();
            let pairs = [
                (
                    mfei(&mf, &inc, &costs, &x, 1).unwrap(),
                    expected_improvement(&gp, &inc, &x),
                ),
                (
                    mfpi(&mf, &inc, &costs, &x, 1).unwrap(),
                    probability_of_improvement(&gp, &inc, &x) * eta3,
                ),
                (
                    mfmes(&mf, &minvals, &costs, &x, 1).unwrap(),
                    max_value_entropy_search(&gp, &minvals, &x),
                ),
            ];
            for (w, (a, b)) in worst.iter_mut().zip(pairs) {
                *w = w.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }
    let passed = worst.iter().all(|w| *w <= REDUCTION_TOL);
    outcome(
        passed,
        format!(
            "max deviation MFEI/EI {:.1e}, MFPI/(PI·eta3) {:.1e}, MFMES/MES {:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let published: [(&str, &[f64], f64); 4] = [
        ("forrester", &[0.7572], -6.0207),
        ("rosenbrock_d5", &[1.0; 5], 0.0),
        ("rastrigin_sr", &[0.1, 0.1], 0.0),
        ("alos_d1", &[0.2755], -0.6250),
    ];
    for (name, x, f) in published {
        let fam = lookup(name).unwrap();
        let v = fam.evaluate_noise_free(fam.levels, x).unwrap();
        let good = (v - f).abs() <= RECORD_TOL && (fam.optimum.f - f).abs() <= RECORD_TOL;
        ok &= good;
        if !good {
            notes.push(format!("{name}: f(x*) = {v}, expected {f}"));
        }
    }
    for c in verify_registry(GRID_POINTS) {
        if c.check == "grid oracle" {
            println!("    {} grid oracle: {}", c.family, c.detail);
        }
        if !c.passed {
            ok = false;
            notes.push(format!("{} {}: {}", c.family, c.check, c.detail));
        }
    }
    let detail = if notes.is_empty() {
        "published optima reproduced, all registry checks pass".to_string()
    } else {
        notes.join("; ")
    };
    outcome(ok, detail)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

fn criterion_4() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // Interpolation of noiseless data.
    let x: Vec<Vec<f64>> = (0..12)
        .map(|i| vec![i as f64 / 11.0, ((i * 7) % 12) as f64 / 11.0])
        .collect();
    let y: Vec<f64> = x.iter().map(|v| (6.0 * v[0]).sin() + v[1] * v[1]).collect();
    let g = fit_gp(&x, &y, &mut RandomStream::new(4)).unwrap();
    let interp = x
        .iter()
        .zip(&y)
        .map(|(x, y)| (g.predict(x).0 - y).abs())
        .fold(0.0, f64::max);
    ok &= interp <= INTERP_TOL;
    notes.push(format!("interpolation error {interp:.1e}"));

    // Recovery on a draw from a known prior.
    // Forty points over twenty correlation lengths; with fewer, the signal
    // variance of a single path is weakly identified.
    let (ell, var) = (0.05, 1.5);
    let n = 40;
    let mut s = RandomStream::new(44);
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![(i as f64 + s.uniform()) / n as f64])
        .collect();
    let truth = KernelParams::new(vec![ell], var, 0.0);
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] =
                var * truth.correlation(&xs[i], &xs[j]) + if i == j { 1e-8 } else { 0.0 };
        }
    }
    let f = spd_factor(&k, n).unwrap();
    let z: Vec<f64> = (0..n).map(|_| s.normal()).collect();
    let ys: Vec<f64> = (0..n)
        .map(|i| (0..=i).map(|j| f.get(i, j) * z[j]).sum())
        .collect();
    let g = fit_gp(&xs, &ys, &mut RandomStream::new(45)).unwrap();
    let fitted_ell = g.params().lengthscales[0];
    let fitted_var = g.params().signal_variance * g.scaling().scale.powi(2);
    let within = |a: f64, b: f64| a / b <= RECOVERY_FACTOR && b / a <= RECOVERY_FACTOR;
    let rec = within(fitted_ell, ell) && within(fitted_var, var);
    ok &= rec;
    notes.push(format!(
        "recovered lengthscale {fitted_ell:.3} (true {ell}), variance {fitted_var:.3} (true {var})"
    ));

    // Joint covariance of random mixed-level sets.
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let mut s = RandomStream::new(500 + trial);
        let levels = 2 + (trial as usize % 3);
        let dim = 1 + (trial as usize % 3);
        let params = MfKernelParams {
            levels: (0..levels)
                .map(|_| {
                    KernelParams::new(
                        (0..dim).map(|_| s.uniform_in(0.05, 1.0)).collect(),
                        s.uniform_in(0.1, 4.0),
                        0.0,
                    )
                })
                .collect(),
            rho: (1..levels).map(|_| s.uniform_in(-2.0, 2.0)).collect(),
        };
        let m = 30;
        let pts: Vec<(Vec<f64>, usize)> = (0..m)
            .map(|_| {
                (
                    (0..dim).map(|_| s.uniform()).collect(),
                    1 + (s.uniform() * levels as f64) as usize % levels,
                )
            })
            .collect();
        let mut kk = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                kk[i * m + j] =
                    mf_kernel_eval(&params, &pts[i].0, pts[i].1, &pts[j].0, pts[j].1).unwrap();
            }
        }
        let trace: f64 = (0..m).map(|i| kk[i * m + i]).sum();
        let min = symmetric_eigenvalues(kk, m)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        worst = worst.min(min / trace);
    }
    let psd = worst >= -PSD_REL_TOL;
    ok &= psd;
    notes.push(format!(
        "smallest eigenvalue / trace over 20 sets {worst:.1e}"
    ));
    outcome(ok, notes.join(", "))
}

/// Exact final state of the printed two-mass system by modal decomposition.
fn spring_mass_exact(cfg: &SpringMassConfig) -> [f64; 4] {
    let k = cfg.k1 + cfg.k2;
    // h'' = -A h with A = M^{-1} K.
    let a = [
        [k / cfg.m1, -cfg.k2 / cfg.m1],
        [-cfg.k2 / cfg.m2, k / cfg.m2],
    ];
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (tr * tr / 4.0 - det).sqrt();
    let lambdas = [tr / 2.0 - disc, tr / 2.0 + disc];
    let vecs: Vec<[f64; 2]> = lambdas.iter().map(|&l| [a[0][1], l - a[0][0]]).collect();
    let detv = vecs[0][0] * vecs[1][1] - vecs[1][0] * vecs[0][1];
    let solve = |b: [f64; 2]| {
        [
            (b[0] * vecs[1][1] - vecs[1][0] * b[1]) / detv,
            (vecs[0][0] * b[1] - b[0] * vecs[0][1]) / detv,
        ]
    };
    let c = solve([cfg.initial[0], cfg.initial[1]]);
    let d = solve([cfg.initial[2], cfg.initial[3]]);
    let t = cfg.t_end;
    let mut out = [0.0; 4];
    for m in 0..2 {
        let w = lambdas[m].sqrt();
        let pos = c[m] * (w * t).cos() + d[m] / w * (w * t).sin();
        let vel = -c[m] * w * (w * t).sin() + d[m] * (w * t).cos();
        for i in 0..2 {
            out[i] += vecs[m][i] * pos;
            out[2 + i] += vecs[m][i] * vel;
        }
    }
    out
}

fn criterion_5() -> Outcome {
    let points: [[f64; 4]; 3] = [
        [1.0, 1.0, 1.0, 1.0],
        [3.0, 2.0, 1.5, 2.5],
        [1.2, 3.7, 2.2, 0.8],
    ];
    let mut ratios = Vec::new();
    for p in points {
        let err = |dt: f64| {
            let cfg = SpringMassConfig::from_point(&p, dt);
            let a = cfg.final_state();
            let b = spring_mass_exact(&cfg);
            (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
        };
        ratios.push(err(0.02) / err(0.01));
    }
    let ok = ratios
        .iter()
        .all(|r| (r / RK4_RATIO - 1.0).abs() <= RK4_RATIO_SPREAD);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    outcome(
        ok,
        format!(
            "error ratios on dt 0.02 -> 0.01 over t = {SPRING_MASS_T_END}: {}",
            shown.join(", ")
        ),
    )
}

/// Trials of one method, or `None` when the deadline passes first.
fn run_method(cfg: &ExperimentConfig, deadline: Instant) -> Option<Vec<TrialTrace>> {
    let mut traces = Vec::new();
    for t in 0..cfg.trials {
        let trace = run_trial_with(cfg, t, |_| Instant::now() < deadline).ok()?;
        if trace.status == TrialStatus::Stopped {
            return None;
        }
        traces.push(trace);
    }
    Some(traces)
}

fn print_curves(runs: &[(String, Vec<TrialTrace>)]) {
    let Some(b_max) = runs.first().map(|r| r.1[0].b_max) else {
        return;
    };
    print!("      {:>8}", "B");
    for (name, _) in runs {
        print!(" {name:>10}");
    }
    println!();
    for i in 0..=20 {
        let b = b_max * i as f64 / 20.0;
        print!("      {b:>8.2}");
        for (_, t) in runs {
            print!(" {:>10.3e}", median_at(t, b));
        }
        println!();
    }
}

/// Runs `methods` on `benchmark` within the time limit and applies `judge`.
fn sub_criterion(
    label: &str,
    benchmark: &str,
    methods: &[AcquisitionKind],
    judge: impl Fn(&[(String, Vec<TrialTrace>)]) -> (bool, String),
) -> bool {
    let start = Instant::now();
    let deadline = start + SUBCRITERION_LIMIT;
    let mut runs = Vec::new();
    for &m in methods {
        let cfg = ExperimentConfig::new(benchmark, m).unwrap();
        match run_method(&cfg, deadline) {
            Some(t) => runs.push((m.to_string(), t)),
            None => {
                println!(
                    "    6({label}) FAIL: time limit of {} min reached while running {m} on {benchmark} ({} of {} methods done)",
                    SUBCRITERION_LIMIT.as_secs() / 60,
                    runs.len(),
                    methods.len()
                );
                print_curves(&runs);
                return false;
            }
        }
    }
    let (ok, detail) = judge(&runs);
    println!(
        "    6({label}) {}: {detail} [{:.0} s]",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    if !ok {
        print_curves(&runs);
    }
    ok
}

fn reach(runs: &[(String, Vec<TrialTrace>)], name: &str) -> Option<f64> {
    runs.iter()
        .find(|r| r.0 == name)
        .and_then(|r| budget_to_reach(&r.1, SOLVED))
}

fn final_median(runs: &[(String, Vec<TrialTrace>)], name: &str) -> f64 {
    let t = &runs.iter().find(|r| r.0 == name).unwrap().1;
    median_at(t, t[0].b_max)
}

fn show(b: Option<f64>) -> String {
    b.map_or("never".into(), |v| format!("{v:.3}"))
}

fn criterion_6() -> Outcome {
    use AcquisitionKind::*;
    let a = sub_criterion("a", "forrester", &[Ei, Mfei], |r| {
        let (ei, mf) = (reach(r, "ei"), reach(r, "mfei"));
        let ok = match (mf, ei) {
            (Some(m), Some(e)) => m < e,
            (Some(_), None) => true,
            _ => false,
        };
        (
            ok,
            format!(
                "budget to median eps_t <= {SOLVED}: mfei {}, ei {}",
                show(mf),
                show(ei)
            ),
        )
    });
    let b = sub_criterion("b", "forrester", &[Mes, Pi], |r| {
        let (mes, pi) = (reach(r, "mes"), reach(r, "pi"));
        (
            mes.is_none() && pi.is_some(),
            format!(
                "budget to median eps_t <= {SOLVED}: mes {}, pi {}",
                show(mes),
                show(pi)
            ),
        )
    });
    let c = sub_criterion("c", "rosenbrock_d5", &[Ei, Mes, Mfei, Mfmes], |r| {
        let worst_mf = final_median(r, "mfei").max(final_median(r, "mfmes"));
        let best_sf = final_median(r, "ei").min(final_median(r, "mes"));
        (
            worst_mf < best_sf,
            format!("final median eps_t: worst multi-fidelity {worst_mf:.3e}, best single-fidelity {best_sf:.3e}"),
        )
    });
    let d = sub_criterion(
        "d",
        "rosenbrock_d10",
        &[Ei, Pi, Mes, Mfei, Mfpi, Mfmes],
        |r| {
            let solved: Vec<&str> = r
                .iter()
                .filter(|x| budget_to_reach(&x.1, SOLVED).is_some())
                .map(|x| x.0.as_str())
                .collect();
            (
                solved.is_empty(),
                format!("methods reaching median eps_t <= {SOLVED}: {solved:?}"),
            )
        },
    );
    let verdicts = [("a", a), ("b", b), ("c", c), ("d", d)];
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.1).map(|v| v.0).collect();
    outcome(
        failed.is_empty(),
        format!("failed sub-criteria: {failed:?}"),
    )
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(
        std::iter::once("mfbo").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8_lossy(&out).into_owned() + &String::from_utf8_lossy(&err),
    )
}

const REPLAY_RUNS: [&[&str]; 3] = [
    &[
        "--benchmark",
        "alos_d1",
        "--acq",
        "mfmes",
        "--trials",
        "3",
        "--b-max",
        "8",
    ],
    &[
        "--benchmark",
        "paciorek_noisy",
        "--acq",
        "ei",
        "--trials",
        "2",
        "--b-max",
        "6",
    ],
    &[
        "--benchmark",
        "jump_forrester",
        "--acq",
        "mfpi",
        "--trials",
        "2",
        "--b-max",
        "5",
        "--seed",
        "9",
    ],
];

fn csv_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.to_string_lossy().contains("_trial") && p.extension().is_some_and(|e| e == "csv")
        })
        .collect();
    v.sort();
    v
}

fn criterion_7(root: &Path) -> Outcome {
    let first = root.join("first");
    let second = root.join("replay");
    for args in REPLAY_RUNS {
        let mut full = vec!["bench"];
        full.extend_from_slice(args);
        full.extend_from_slice(&["--out", first.to_str().unwrap()]);
        let (code, text) = run_cli(&full);
        if code != 0 {
            return outcome(false, format!("bench {args:?} exited {code}: {text}"));
        }
    }
    let manifests: Vec<_> = std::fs::read_dir(&first)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with("_manifest.json"))
        .collect();
    for m in &manifests {
        let (code, text) = run_cli(&[
            "bench",
            "--manifest",
            m.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
            "--jobs",
            "2",
        ]);
        if code != 0 {
            return outcome(
                false,
                format!("replay of {} exited {code}: {text}", m.display()),
            );
        }
    }
    let a = csv_files(&first);
    let b = csv_files(&second);
    let names = |v: &[std::path::PathBuf]| {
        v.iter()
            .map(|p| p.file_name().unwrap().to_owned())
            .collect::<Vec<_>>()
    };
    if a.is_empty() || names(&a) != names(&b) {
        return outcome(false, "replay produced a different set of trial files");
    }
    let differing: Vec<_> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| std::fs::read(x).unwrap() != std::fs::read(y).unwrap())
        .map(|(x, _)| x.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    outcome(
        differing.is_empty(),
        format!(
            "{} trial CSVs from {} manifests, differing: {differing:?}",
            a.len(),
            manifests.len()
        ),
    )
}

fn criterion_8(root: &Path) -> Outcome {
    let mut rows = 0;
    let mut worst: f64 = 0.0;
    for path in csv_files(&root.join("first")) {
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
        let (ix, iff, it) = (col("eps_x"), col("eps_f"), col("eps_t"));
        for line in lines {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            worst = worst.max((v[it] - combined_error(v[ix], v[iff])).abs());
            rows += 1;
        }
    }
    let mut at_optimum = Vec::new();
    let mut optimum_ok = true;
    for f in registry() {
        let m = compute_metrics(&f, &f.optimum.x, 0.0).unwrap();
        let good = m.eps_x <= OPTIMUM_EPS_X_TOL
            && m.eps_f <= OPTIMUM_EPS_F_TOL
            && m.eps_t <= OPTIMUM_EPS_F_TOL;
        optimum_ok &= good;
        if m.eps_f > 0.0 || m.eps_x > 0.0 || !good {
            at_optimum.push(format!(
                "{} eps_x {:.1e} eps_f {:.1e}",
                f.name, m.eps_x, m.eps_f
            ));
        }
    }
    outcome(
        rows > 0 && worst <= IDENTITY_TOL && optimum_ok,
        format!(
            "{rows} rows, worst identity residual {worst:.1e}; nonzero errors at recorded optima: {at_optimum:?}"
        ),
    )
}

fn main() {
    let scratch = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("formula fidelity", Box::new(criterion_1)),
        ("reduction laws", Box::new(criterion_2)),
        ("registry self-check", Box::new(criterion_3)),
        ("GP sanity", Box::new(criterion_4)),
        ("RK4 order", Box::new(criterion_5)),
        ("qualitative reproduction", Box::new(criterion_6)),
        ("determinism", Box::new(|| criterion_7(scratch.path()))),
        (
            "metric identities",
            Box::new(|| criterion_8(scratch.path())),
        ),
    ];
    let only: Option<Vec<usize>> = std::env::var("MFBO_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n))
            && !(n == 7 && only.as_ref().is_some_and(|o| o.contains(&8)))
        {
            continue;
        }
        let start = Instant::now();
        let mut o = f();
        let secs = start.elapsed().as_secs_f64();
        if let Some(&(_, limit)) = TIME_LIMITS.iter().find(|t| t.0 == n) {
            if secs > limit {
                o.passed = false;
                o.detail
                    .push_str(&format!("; exceeded the {limit} s limit"));
            }
        }
        failures += usize::from(!o.passed);
        println!(
            "{} criterion {n} ({name}): {} [{secs:.1} s]",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failures > 0 && std::env::var("MFBO_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
