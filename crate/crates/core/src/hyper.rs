//! Maximum-likelihood estimation shared by the single- and multi-fidelity GPs.
//!
//! Both surrogates are the same autoregressive covariance model; a plain GP is
//! the one-level case. Hyperparameters are packed into a vector `θ`:
//!
//! ```text
//! [ ln ℓ(1,1..D), ln σ²(1), ..., ln ℓ(L,1..D), ln σ²(L), ρ(2..L), ln σ²_noise ]
//! ```
//!
//! and the evidence is maximized with a projected L-BFGS from several starts.

use crate::error::{Error, Result};
use crate::gp::{KernelParams, JITTER_MAX, JITTER_START};
use crate::math::{latin_hypercube, spd_factor, RandomStream, SpdFactor, LN_SQRT_2PI};
use crate::mfgp::MfKernelParams;
use crate::optim::minimize_box;

pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-3, 1e2);
pub const SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (1e-8, 1e4);
pub const NOISE_VARIANCE_BOUNDS: (f64, f64) = (1e-10, 1e2);
pub const RHO_BOUNDS: (f64, f64) = (-5.0, 5.0);

// Sub-box the random starts are drawn from.
const LENGTHSCALE_START: (f64, f64) = (0.05, 2.0);
const SIGNAL_VARIANCE_START: (f64, f64) = (0.1, 10.0);
const NOISE_VARIANCE_START: (f64, f64) = (1e-8, 1e-2);
const RHO_START: (f64, f64) = (0.0, 2.0);

/// Settings of the multi-start likelihood maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    /// Number of random (Latin hypercube) starts.
    pub restarts: usize,
    /// Iteration cap of each local search.
    pub max_iter: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            restarts: 10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HyperLayout {
    pub dim: usize,
    pub levels: usize,
}

impl HyperLayout {
    pub fn new(dim: usize, levels: usize) -> Self {
        HyperLayout { dim, levels }
    }

    pub fn len(&self) -> usize {
        self.levels * (self.dim + 1) + self.levels
    }

    fn lengthscale(&self, level: usize, d: usize) -> usize {
        level * (self.dim + 1) + d
    }

    fn signal(&self, level: usize) -> usize {
        level * (self.dim + 1) + self.dim
    }

    /// Index of ρ for 0-based `level ≥ 1`.
    fn rho(&self, level: usize) -> usize {
        self.levels * (self.dim + 1) + level - 1
    }

    fn noise(&self) -> usize {
        self.len() - 1
    }

    fn bounds_from(
        &self,
        ls: (f64, f64),
        sv: (f64, f64),
        rho: (f64, f64),
        noise: (f64, f64),
    ) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![0.0; self.len()];
        let mut hi = vec![0.0; self.len()];
        for l in 0..self.levels {
            for d in 0..self.dim {
                lo[self.lengthscale(l, d)] = ls.0.ln();
                hi[self.lengthscale(l, d)] = ls.1.ln();
            }
            lo[self.signal(l)] = sv.0.ln();
            hi[self.signal(l)] = sv.1.ln();
            if l > 0 {
                lo[self.rho(l)] = rho.0;
                hi[self.rho(l)] = rho.1;
            }
        }
        lo[self.noise()] = noise.0.ln();
        hi[self.noise()] = noise.1.ln();
        (lo, hi)
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.bounds_from(
            LENGTHSCALE_BOUNDS,
            SIGNAL_VARIANCE_BOUNDS,
            RHO_BOUNDS,
            NOISE_VARIANCE_BOUNDS,
        )
    }

    fn start_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.bounds_from(
            LENGTHSCALE_START,
            SIGNAL_VARIANCE_START,
            RHO_START,
            NOISE_VARIANCE_START,
        )
    }

    pub fn pack(&self, p: &MfKernelParams) -> Vec<f64> {
        let mut theta = vec![0.0; self.len()];
        for (l, k) in p.levels.iter().enumerate() {
            for d in 0..self.dim {
                theta[self.lengthscale(l, d)] = k.lengthscales[d].ln();
            }
            theta[self.signal(l)] = k.signal_variance.ln();
        }
        for (i, r) in p.rho.iter().enumerate() {
            theta[self.rho(i + 1)] = *r;
        }
        theta[self.noise()] = p.noise_variance().ln();
        theta
    }

    pub fn unpack(&self, theta: &[f64]) -> MfKernelParams {
        let noise = theta[self.noise()].exp();
        let levels = (0..self.levels)
            .map(|l| KernelParams {
                lengthscales: (0..self.dim)
                    .map(|d| theta[self.lengthscale(l, d)].exp())
                    .collect(),
                signal_variance: theta[self.signal(l)].exp(),
                noise_variance: noise,
            })
            .collect();
        let rho = (1..self.levels).map(|l| theta[self.rho(l)]).collect();
        MfKernelParams { levels, rho }
    }
}

/// Training data in model units: flat inputs (`n×dim`), 0-based levels, targets.
pub(crate) struct TrainingSet<'a> {
    x: &'a [f64],
    dim: usize,
    level: &'a [usize],
    y: &'a [f64],
}

impl<'a> TrainingSet<'a> {
    pub fn new(x: &'a [f64], dim: usize, level: &'a [usize], y: &'a [f64]) -> Result<Self> {
        let n = y.len();
        if x.len() != n * dim || level.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n * dim,
                got: x.len(),
            });
        }
        Ok(TrainingSet { x, dim, level, y })
    }

    fn len(&self) -> usize {
        self.y.len()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }
}

/// Products of ρ along the autoregressive chain: `chain[j][l] = Π_{i=j+1..=l} ρ_i`
/// (0-based levels, zero when `j > l`).
pub(crate) fn rho_chain(rho: &[f64], levels: usize) -> Vec<Vec<f64>> {
    let mut chain = vec![vec![0.0; levels]; levels];
    for j in 0..levels {
        chain[j][j] = 1.0;
        for l in j + 1..levels {
            chain[j][l] = chain[j][l - 1] * rho[l - 1];
        }
    }
    chain
}

/// Prior covariance between `(x, a)` and `(x2, b)` (0-based levels).
pub(crate) fn joint_cov(
    p: &MfKernelParams,
    chain: &[Vec<f64>],
    x: &[f64],
    a: usize,
    x2: &[f64],
    b: usize,
) -> f64 {
    (0..=a.min(b))
        .map(|j| chain[j][a] * chain[j][b] * p.levels[j].cov(x, x2))
        .sum()
}

pub(crate) fn prior_var(p: &MfKernelParams, chain: &[Vec<f64>], a: usize) -> f64 {
    (0..=a)
        .map(|j| chain[j][a] * chain[j][a] * p.levels[j].signal_variance)
        .sum()
}

/// Factor the joint training covariance (noise and relative jitter on the
/// diagonal), escalating the jitter ×10 until it succeeds.
pub(crate) fn factor_training(
    p: &MfKernelParams,
    data: &TrainingSet<'_>,
) -> Result<(SpdFactor, f64)> {
    let n = data.len();
    let chain = rho_chain(&p.rho, p.levels.len());
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            k[i * n + j] = joint_cov(
                p,
                &chain,
                data.point(i),
                data.level[i],
                data.point(j),
                data.level[j],
            );
        }
    }
    let noise = p.noise_variance();
    let mut jitter = JITTER_START;
    loop {
        for i in 0..n {
            k[i * n + i] = prior_var(p, &chain, data.level[i]) * (1.0 + jitter) + noise;
        }
        match spd_factor(&k, n) {
            Ok(f) => return Ok((f, jitter)),
            Err(e) => {
                if jitter * 10.0 > JITTER_MAX * (1.0 + 1e-9) {
                    return Err(e);
                }
                jitter *= 10.0;
            }
        }
    }
}

/// Log evidence at `theta` and, optionally, its gradient with respect to `theta`.
pub(crate) fn evidence(
    layout: &HyperLayout,
    data: &TrainingSet<'_>,
    theta: &[f64],
    with_grad: bool,
) -> Option<(f64, Vec<f64>)> {
    let p = layout.unpack(theta);
    let (factor, _) = factor_training(&p, data).ok()?;
    let n = data.len();
    let alpha = factor.solve(data.y).ok()?;
    let fit: f64 = data.y.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let value = -0.5 * fit - 0.5 * factor.log_det() - n as f64 * LN_SQRT_2PI;
    if !value.is_finite() {
        return None;
    }
    if !with_grad {
        return Some((value, Vec::new()));
    }

    let levels = layout.levels;
    let dim = layout.dim;
    let kinv = factor.inverse();
    let chain = rho_chain(&p.rho, levels);
    // d chain[j][l] / d ρ_m, indexed [m][j][l]
    let dchain: Vec<Vec<Vec<f64>>> = (0..levels)
        .map(|m| {
            (0..levels)
                .map(|j| {
                    (0..levels)
                        .map(|l| {
                            if m == 0 || !(j < m && m <= l) {
                                0.0
                            } else {
                                (j + 1..=l)
                                    .filter(|&i| i != m)
                                    .map(|i| p.rho[i - 1])
                                    .product()
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut grad = vec![0.0; layout.len()];
    let mut corr = vec![0.0; levels];
    let mut sq = vec![0.0; levels * dim];
    for a in 0..n {
        let xa = data.point(a);
        let la = data.level[a];
        for b in 0..=a {
            let xb = data.point(b);
            let lb = data.level[b];
            let w_full = alpha[a] * alpha[b] - kinv[a * n + b];
            let w = if a == b { 0.5 * w_full } else { w_full };
            let top = la.min(lb);
            for j in 0..=top {
                let ls = &p.levels[j].lengthscales;
                let mut s = 0.0;
                for d in 0..dim {
                    let t = (xa[d] - xb[d]) / ls[d];
                    sq[j * dim + d] = t * t;
                    s += t * t;
                }
                corr[j] = p.levels[j].signal_variance * (-0.5 * s).exp();
            }
            for j in 0..=top {
                let c = chain[j][la] * chain[j][lb];
                let base = w * c * corr[j];
                grad[layout.signal(j)] += base;
                for d in 0..dim {
                    grad[layout.lengthscale(j, d)] += base * sq[j * dim + d];
                }
                for m in (j + 1)..levels {
                    let dc = dchain[m][j][la] * chain[j][lb] + chain[j][la] * dchain[m][j][lb];
                    if dc != 0.0 {
                        grad[layout.rho(m)] += w * dc * corr[j];
                    }
                }
            }
        }
    }
    let noise = p.noise_variance();
    grad[layout.noise()] = 0.5
        * noise
        * (0..n)
            .map(|a| alpha[a] * alpha[a] - kinv[a * n + a])
            .sum::<f64>();
    Some((value, grad))
}

fn flat_theta(layout: &HyperLayout) -> Vec<f64> {
    let mid = (LENGTHSCALE_START.0 * LENGTHSCALE_START.1).sqrt();
    let levels = (0..layout.levels)
        .map(|_| {
            KernelParams::isotropic(
                layout.dim,
                mid,
                SIGNAL_VARIANCE_BOUNDS.0,
                NOISE_VARIANCE_BOUNDS.0,
            )
        })
        .collect();
    layout.pack(&MfKernelParams {
        levels,
        rho: vec![1.0; layout.levels - 1],
    })
}

/// Maximize the evidence. Always consumes the same amount of `stream`
/// regardless of `warm`, so fits stay reproducible.
pub(crate) fn fit(
    layout: &HyperLayout,
    data: &TrainingSet<'_>,
    settings: &FitSettings,
    warm: Option<&[f64]>,
    stream: &mut RandomStream,
) -> Vec<f64> {
    let (slo, shi) = layout.start_box();
    let unit = latin_hypercube(settings.restarts, layout.len(), stream);
    if data.y.iter().all(|z| z.abs() < 1e-12) {
        return flat_theta(layout);
    }
    let (lo, hi) = layout.bounds();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = warm {
        starts.push(w.to_vec());
    }
    starts.extend(unit.iter().map(|u| {
        u.iter()
            .enumerate()
            .map(|(i, v)| slo[i] + v * (shi[i] - slo[i]))
            .collect::<Vec<f64>>()
    }));

    let objective = |t: &[f64]| {
        evidence(layout, data, t, true).map(|(v, g)| (-v, g.into_iter().map(|x| -x).collect()))
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in &starts {
        if let Some(m) = minimize_box(objective, start, &lo, &hi, settings.max_iter) {
            if best.as_ref().map_or(true, |(_, v)| m.value < *v) {
                best = Some((m.x, m.value));
            }
        }
    }
    best.map(|(t, _)| t).unwrap_or_else(|| flat_theta(layout))
}
