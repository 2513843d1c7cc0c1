//! Multi-fidelity benchmark families.
//!
//! Every family maps a point of its raw domain and a 1-based fidelity level
//! to an objective value; the highest level is the reference objective.
//! Optimum records and objective ranges carry their provenance: `Published`
//! for values stated with the function definitions, `Computed` for values
//! obtained by dense probing or local refinement (see [`grid_oracle`]).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::acquisition_mf::CostSchedule;
use crate::error::{Error, Result};
use crate::math::{latin_hypercube, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Published,
    Computed,
}

/// Known optimum of a family's top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumRecord {
    pub x: Vec<f64>,
    pub f: f64,
    pub x_source: Provenance,
    pub f_source: Provenance,
}

/// Geometry of the set of minimizers, used for the location error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OptimalSet {
    /// A single point, the record's `x`.
    Point,
    /// Every point with coordinate `axis` equal to `value`.
    Hyperplane { axis: usize, value: f64 },
    /// The level curves `x₁x₂ = c` on which `sin(1/(x₁x₂)) = -1`.
    PaciorekCurves,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Kind {
    Forrester,
    JumpForrester,
    Rosenbrock,
    Rastrigin,
    Alos1,
    AlosN,
    SpringMass,
    Paciorek,
}

/// A benchmark problem with several fidelity levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityFamily {
    pub name: String,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub levels: usize,
    pub costs: CostSchedule,
    pub optimum: OptimumRecord,
    pub optimal_set: OptimalSet,
    /// Largest top-level value on the domain.
    pub f_max: f64,
    pub f_max_source: Provenance,
    /// Whether observations carry random noise.
    pub noisy: bool,
    kind: Kind,
}

/// Rotation angle of the shifted-rotated Rastrigin problem.
pub const RASTRIGIN_THETA: f64 = 0.2;
const RASTRIGIN_SHIFT: [f64; 2] = [0.1, 0.1];
const RASTRIGIN_PHI: [f64; 3] = [2500.0, 5000.0, 10000.0];

/// Noise standard deviations of the Paciorek family (top level, lower level).
pub const PACIOREK_NOISE: (f64, f64) = (0.0125, 0.075);
const PACIOREK_A: f64 = 0.5;

/// Time steps of the spring-mass fidelities (low, high).
pub const SPRING_MASS_DT: (f64, f64) = (0.6, 0.01);
pub const SPRING_MASS_T_END: f64 = 6.0;

fn forrester_hf(x: f64) -> f64 {
    (6.0 * x - 2.0).powi(2) * (12.0 * x - 4.0).sin()
}

fn forrester(level: usize, x: f64) -> f64 {
    match level {
        4 => forrester_hf(x),
        3 => (5.5 * x - 2.5).powi(2) * (12.0 * x - 4.0).sin(),
        2 => 0.75 * forrester_hf(x) + 5.0 * (x - 0.5) - 2.0,
        _ => 0.5 * forrester_hf(x) + 10.0 * (x - 0.5) - 5.0,
    }
}

fn jump_forrester(level: usize, x: f64) -> f64 {
    let jump = x > 0.5;
    let hf = forrester_hf(x) + if jump { 10.0 } else { 0.0 };
    if level == 2 {
        hf
    } else {
        0.5 * hf + 10.0 * (x - 0.5) + if jump { -2.0 } else { -5.0 }
    }
}

fn rosenbrock(level: usize, x: &[f64]) -> f64 {
    let pairs = x.windows(2);
    let hf = |x: &[f64]| -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    };
    let sum: f64 = x.iter().sum();
    match level {
        3 => hf(x),
        2 => {
            pairs
                .map(|w| 50.0 * (w[1] - w[0] * w[0]).powi(2) + (-2.0 - w[0]).powi(2))
                .sum::<f64>()
                - 0.5 * sum
        }
        _ => (hf(x) - 4.0 - 0.5 * sum) / (10.0 + 0.25 * sum),
    }
}

fn rastrigin(level: usize, x: &[f64]) -> f64 {
    let (s, c) = RASTRIGIN_THETA.sin_cos();
    let d = [x[0] - RASTRIGIN_SHIFT[0], x[1] - RASTRIGIN_SHIFT[1]];
    let z = [c * d[0] - s * d[1], s * d[0] + c * d[1]];
    let base: f64 = z.iter().map(|v| v * v + 1.0 - (10.0 * PI * v).cos()).sum();
    let theta = 1.0 - 1e-4 * RASTRIGIN_PHI[level - 1];
    let (a, w, b) = (theta, 10.0 * PI * theta, 0.5 * PI * theta);
    let resolution: f64 = z.iter().map(|v| a * (w * v + b + PI).cos().powi(2)).sum();
    base + resolution
}

fn alos1(level: usize, x: f64) -> f64 {
    let hf = (30.0 * (x - 0.9).powi(4)).sin() * (2.0 * (x - 0.9)).cos() + (x - 0.9) / 2.0;
    if level == 2 {
        hf
    } else {
        (hf - 1.0 + x) / (1.0 + 0.25 * x)
    }
}

fn alos_n(level: usize, x: &[f64]) -> f64 {
    let mut hf =
        (21.0 * (x[0] - 0.9).powi(4)).sin() * (2.0 * (x[0] - 0.9)).cos() + (x[0] - 0.7) / 2.0;
    let mut prod = x[0];
    for (k, &xi) in x.iter().enumerate().skip(1) {
        let i = (k + 1) as f64;
        prod *= xi;
        hf += i * xi.powi(k as i32 + 1) * prod.sin();
    }
    if level == 2 {
        return hf;
    }
    let sum: f64 = x.iter().sum();
    let denom: f64 = 5.0
        + x.iter()
            .enumerate()
            .map(|(k, &xi)| {
                let i = (k + 1) as f64;
                if k < 2 {
                    0.25 * i * xi
                } else {
                    -0.25 * i * xi
                }
            })
            .sum::<f64>();
    (hf - 2.0 + sum) / denom
}

fn paciorek_parts(x: &[f64]) -> (f64, f64) {
    let p: f64 = x.iter().product();
    ((1.0 / p).sin(), (1.0 / p).cos())
}

/// Configuration of the two-mass, two-spring system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpringMassConfig {
    pub m1: f64,
    pub m2: f64,
    pub k1: f64,
    pub k2: f64,
    pub dt: f64,
    pub t_end: f64,
    /// `(h₁, h₂, ḣ₁, ḣ₂)` at t = 0.
    pub initial: [f64; 4],
}

impl SpringMassConfig {
    pub const DEFAULT_INITIAL: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

    /// Parameters `[m₁, m₂, k₁, k₂]` with the default initial state.
    pub fn from_point(x: &[f64], dt: f64) -> Self {
        SpringMassConfig {
            m1: x[0],
            m2: x[1],
            k1: x[2],
            k2: x[3],
            dt,
            t_end: SPRING_MASS_T_END,
            initial: Self::DEFAULT_INITIAL,
        }
    }

    fn rhs(&self, s: &[f64; 4]) -> [f64; 4] {
        let k = self.k1 + self.k2;
        [
            s[2],
            s[3],
            (-k * s[0] + self.k2 * s[1]) / self.m1,
            (self.k2 * s[0] - k * s[1]) / self.m2,
        ]
    }

    /// Full state at `t_end` by classic fourth-order Runge-Kutta. The last
    /// step is shortened when `dt` does not divide `t_end`.
    pub fn final_state(&self) -> [f64; 4] {
        let steps = (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize;
        let mut s = self.initial;
        let axpy = |s: &[f64; 4], h: f64, d: &[f64; 4]| -> [f64; 4] {
            std::array::from_fn(|i| s[i] + h * d[i])
        };
        for i in 0..steps {
            let h = self.dt.min(self.t_end - i as f64 * self.dt);
            let k1 = self.rhs(&s);
            let k2 = self.rhs(&axpy(&s, 0.5 * h, &k1));
            let k3 = self.rhs(&axpy(&s, 0.5 * h, &k2));
            let k4 = self.rhs(&axpy(&s, h, &k3));
            s = std::array::from_fn(|j| {
                s[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            });
        }
        s
    }
}

/// Position of the first mass at `t_end`.
pub fn spring_mass_simulate(cfg: &SpringMassConfig) -> f64 {
    cfg.final_state()[0]
}

impl FidelityFamily {
    pub fn kind_label(&self) -> &'static str {
        match self.kind {
            Kind::Forrester => "forrester",
            Kind::JumpForrester => "jump_forrester",
            Kind::Rosenbrock => "rosenbrock",
            Kind::Rastrigin => "rastrigin",
            Kind::Alos1 | Kind::AlosN => "alos",
            Kind::SpringMass => "spring_mass",
            Kind::Paciorek => "paciorek",
        }
    }

    fn check(&self, level: usize, x: &[f64]) -> Result<()> {
        if level == 0 || level > self.levels {
            return Err(Error::LevelOutOfRange {
                level,
                levels: self.levels,
            });
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let inside = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| v.is_finite() && *v >= *lo && *v <= *hi);
        if !inside {
            return Err(Error::OutOfDomain {
                family: self.name.clone(),
                point: x.to_vec(),
            });
        }
        Ok(())
    }

    fn deterministic(&self, level: usize, x: &[f64]) -> f64 {
        match self.kind {
            Kind::Forrester => forrester(level, x[0]),
            Kind::JumpForrester => jump_forrester(level, x[0]),
            Kind::Rosenbrock => rosenbrock(level, x),
            Kind::Rastrigin => rastrigin(level, x),
            Kind::Alos1 => alos1(level, x[0]),
            Kind::AlosN => alos_n(level, x),
            Kind::SpringMass => {
                let dt = if level == 2 {
                    SPRING_MASS_DT.1
                } else {
                    SPRING_MASS_DT.0
                };
                spring_mass_simulate(&SpringMassConfig::from_point(x, dt))
            }
            Kind::Paciorek => {
                let (s, c) = paciorek_parts(x);
                if level == 2 {
                    s
                } else {
                    s - 9.0 * PACIOREK_A * PACIOREK_A * c
                }
            }
        }
    }

    /// Objective at fidelity `level`. Noisy families draw their noise from `stream`.
    pub fn evaluate(&self, level: usize, x: &[f64], stream: &mut RandomStream) -> Result<f64> {
        self.check(level, x)?;
        let mut y = self.deterministic(level, x);
        if self.kind == Kind::Paciorek {
            // The lower level is built on the noisy top level, so it carries both draws.
            y += PACIOREK_NOISE.0 * stream.normal();
            if level == 1 {
                y += PACIOREK_NOISE.1 * stream.normal();
            }
        }
        Ok(y)
    }

    /// Objective with any observation noise switched off.
    pub fn evaluate_noise_free(&self, level: usize, x: &[f64]) -> Result<f64> {
        self.check(level, x)?;
        Ok(self.deterministic(level, x))
    }

    /// Euclidean distance (raw domain units) from `x` to the nearest minimizer.
    pub fn optimum_distance(&self, x: &[f64]) -> f64 {
        match self.optimal_set {
            OptimalSet::Point => x
                .iter()
                .zip(&self.optimum.x)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt(),
            OptimalSet::Hyperplane { axis, value } => (x[axis] - value).abs(),
            OptimalSet::PaciorekCurves => paciorek_curve_distance(x, &self.lower, &self.upper),
        }
    }

    /// Map a point of the unit cube onto the domain.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (lo + v * (hi - lo)).clamp(*lo, *hi))
            .collect()
    }

    /// Map a domain point into the unit cube.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    }
}

/// Distance to the nearest point of `{x₁x₂ = 2/((4k+3)π)}` inside the box.
fn paciorek_curve_distance(x: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0.. {
        let c = 2.0 / ((4 * k + 3) as f64 * PI);
        if c < lo[0] * lo[1] {
            break;
        }
        // Parameterize the curve by x₁ over the part that stays inside the box.
        let a = lo[0].max(c / hi[1]);
        let b = hi[0].min(c / lo[1]);
        if a > b {
            continue;
        }
        let dist = |t: f64| ((x[0] - t).powi(2) + (x[1] - c / t).powi(2)).sqrt();
        let n = 2000;
        let (mut t_best, mut d_best) = (a, dist(a));
        for i in 1..=n {
            let t = a + (b - a) * i as f64 / n as f64;
            let d = dist(t);
            if d < d_best {
                (t_best, d_best) = (t, d);
            }
        }
        // Golden-section refinement around the best sample.
        let h = (b - a) / n as f64;
        let (mut l, mut r) = ((t_best - h).max(a), (t_best + h).min(b));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let m1 = r - g * (r - l);
            let m2 = l + g * (r - l);
            if dist(m1) < dist(m2) {
                r = m2;
            } else {
                l = m1;
            }
        }
        best = best.min(d_best.min(dist(0.5 * (l + r))));
    }
    best
}

fn costs(v: &[f64]) -> CostSchedule {
    CostSchedule::new(v.to_vec()).expect("registry cost schedules are valid")
}

fn rosenbrock_family(dim: usize) -> FidelityFamily {
    FidelityFamily {
        name: format!("rosenbrock_d{dim}"),
        dim,
        lower: vec![-2.0; dim],
        upper: vec![2.0; dim],
        levels: 3,
        costs: costs(&[0.1, 0.316, 1.0]),
        optimum: OptimumRecord {
            x: vec![1.0; dim],
            f: 0.0,
            x_source: Provenance::Published,
            f_source: Provenance::Published,
        },
        optimal_set: OptimalSet::Point,
        // Attained at [-2]^D: each of the D-1 terms is 100·36 + 9.
        f_max: 3609.0 * (dim - 1) as f64,
        f_max_source: Provenance::Computed,
        noisy: false,
        kind: Kind::Rosenbrock,
    }
}

fn alos_family(dim: usize) -> FidelityFamily {
    let (optimum, optimal_set, f_max, kind) = if dim == 1 {
        (
            OptimumRecord {
                x: vec![0.2755],
                f: -0.6250,
                x_source: Provenance::Published,
                f_source: Provenance::Published,
            },
            OptimalSet::Point,
            0.361_513_623_0,
            Kind::Alos1,
        )
    } else {
        // Every product in the sum contains x₁, so the whole plane x₁ = 0 attains f*.
        // The maximum sits at the all-ones corner (dense probe plus local refinement).
        let f_max = alos_n(2, &vec![1.0; dim]);
        (
            OptimumRecord {
                x: vec![0.0; dim],
                f: -0.562_712_3,
                x_source: Provenance::Published,
                f_source: Provenance::Published,
            },
            OptimalSet::Hyperplane {
                axis: 0,
                value: 0.0,
            },
            f_max,
            Kind::AlosN,
        )
    };
    FidelityFamily {
        name: format!("alos_d{dim}"),
        dim,
        lower: vec![0.0; dim],
        upper: vec![1.0; dim],
        levels: 2,
        costs: costs(&[0.1, 1.0]),
        optimum,
        optimal_set,
        f_max,
        f_max_source: Provenance::Computed,
        noisy: false,
        kind,
    }
}

/// All benchmark families.
pub fn registry() -> Vec<FidelityFamily> {
    vec![
        FidelityFamily {
            name: "forrester".into(),
            dim: 1,
            lower: vec![0.0],
            upper: vec![1.0],
            levels: 4,
            costs: costs(&[0.125, 0.25, 0.5, 1.0]),
            optimum: OptimumRecord {
                x: vec![0.7572],
                f: -6.0207,
                x_source: Provenance::Published,
                f_source: Provenance::Published,
            },
            optimal_set: OptimalSet::Point,
            // f(1) = 16 sin 8
            f_max: 15.829_731_945_974_109,
            f_max_source: Provenance::Computed,
            noisy: false,
            kind: Kind::Forrester,
        },
        FidelityFamily {
            name: "jump_forrester".into(),
            dim: 1,
            lower: vec![0.0],
            upper: vec![1.0],
            levels: 2,
            costs: costs(&[0.1, 1.0]),
            // The stated location lies on the shifted branch; the argmin of the
            // stated value is on the left branch.
            optimum: OptimumRecord {
                x: vec![0.142_589_188_9],
                f: -0.9863,
                x_source: Provenance::Computed,
                f_source: Provenance::Published,
            },
            optimal_set: OptimalSet::Point,
            f_max: 25.829_731_945_974_109,
            f_max_source: Provenance::Computed,
            noisy: false,
            kind: Kind::JumpForrester,
        },
        rosenbrock_family(2),
        rosenbrock_family(5),
        rosenbrock_family(10),
        FidelityFamily {
            name: "rastrigin_sr".into(),
            dim: 2,
            lower: vec![-0.1; 2],
            upper: vec![0.2; 2],
            levels: 3,
            costs: costs(&[0.1, 0.316, 1.0]),
            optimum: OptimumRecord {
                x: RASTRIGIN_SHIFT.to_vec(),
                f: 0.0,
                x_source: Provenance::Published,
                f_source: Provenance::Published,
            },
            optimal_set: OptimalSet::Point,
            f_max: 4.020_040_61,
            f_max_source: Provenance::Computed,
            noisy: false,
            kind: Kind::Rastrigin,
        },
        alos_family(1),
        alos_family(2),
        alos_family(3),
        FidelityFamily {
            name: "spring_mass".into(),
            dim: 4,
            lower: vec![1.0; 4],
            upper: vec![4.0; 4],
            levels: 2,
            costs: costs(&[SPRING_MASS_DT.1 / SPRING_MASS_DT.0, 1.0]),
            optimum: OptimumRecord {
                x: vec![3.996_845_64, 3.289_592_14, 1.0, 3.946_994_87],
                f: -1.0,
                x_source: Provenance::Computed,
                f_source: Provenance::Computed,
            },
            optimal_set: OptimalSet::Point,
            f_max: 1.0,
            f_max_source: Provenance::Computed,
            noisy: false,
            kind: Kind::SpringMass,
        },
        FidelityFamily {
            name: "paciorek_noisy".into(),
            dim: 2,
            lower: vec![0.3; 2],
            upper: vec![1.0; 2],
            levels: 2,
            costs: costs(&[0.1, 1.0]),
            optimum: OptimumRecord {
                x: vec![(2.0 / (3.0 * PI)).sqrt(); 2],
                f: -1.0,
                x_source: Provenance::Computed,
                f_source: Provenance::Computed,
            },
            optimal_set: OptimalSet::PaciorekCurves,
            f_max: 1.0,
            f_max_source: Provenance::Computed,
            noisy: true,
            kind: Kind::Paciorek,
        },
    ]
}

pub fn lookup(name: &str) -> Result<FidelityFamily> {
    registry()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnknownBenchmark(name.to_string()))
}

/// Result of a dense search for the top-level extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub argmin: Vec<f64>,
    pub min: f64,
    pub argmax: Vec<f64>,
    pub max: f64,
}

/// Noise-free top-level extremes over a full tensor grid with about
/// `points` nodes (at least 2 per axis), including the domain boundary.
pub fn grid_oracle(family: &FidelityFamily, points: usize) -> OracleResult {
    let per_axis = ((points as f64).powf(1.0 / family.dim as f64).round() as usize).max(2);
    let mut idx = vec![0usize; family.dim];
    let mut res = OracleResult {
        argmin: Vec::new(),
        min: f64::INFINITY,
        argmax: Vec::new(),
        max: f64::NEG_INFINITY,
    };
    let mut u = vec![0.0; family.dim];
    loop {
        for (d, i) in idx.iter().enumerate() {
            u[d] = *i as f64 / (per_axis - 1) as f64;
        }
        let x = family.from_unit(&u);
        let v = family.deterministic(family.levels, &x);
        if v < res.min {
            res.min = v;
            res.argmin = x.clone();
        }
        if v > res.max {
            res.max = v;
            res.argmax = x;
        }
        let mut d = 0;
        loop {
            if d == family.dim {
                return res;
            }
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Noise-free top-level extremes over a Latin hypercube of `n` points.
pub fn lhs_oracle(family: &FidelityFamily, n: usize, stream: &mut RandomStream) -> OracleResult {
    let mut res = OracleResult {
        argmin: Vec::new(),
        min: f64::INFINITY,
        argmax: Vec::new(),
        max: f64::NEG_INFINITY,
    };
    for u in latin_hypercube(n, family.dim, stream) {
        let x = family.from_unit(&u);
        let v = family.deterministic(family.levels, &x);
        if v < res.min {
            res.min = v;
            res.argmin = x.clone();
        }
        if v > res.max {
            res.max = v;
            res.argmax = x;
        }
    }
    res
}
