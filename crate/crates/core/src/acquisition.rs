//! Single-fidelity acquisition functions (minimization convention) and the
//! derivative-free acquisition maximizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::math::{latin_hypercube, log_norm_cdf, norm_cdf, norm_pdf, RandomStream, LN_SQRT_2PI};
use crate::optim::pattern_search_max;

/// Posterior standard deviations below this are treated as zero.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Best observed point at the reference fidelity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub x: Vec<f64>,
    pub value: f64,
}

impl Incumbent {
    /// Lowest target of a fitted GP.
    pub fn from_posterior(g: &GpPosterior) -> Option<Self> {
        g.inputs()
            .iter()
            .zip(g.targets())
            .fold(None, |best: Option<Incumbent>, (x, &y)| match best {
                Some(b) if b.value <= y => Some(b),
                _ => Some(Incumbent {
                    x: x.clone(),
                    value: y,
                }),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MesSettings {
    pub num_min_samples: usize,
    pub grid_size: usize,
}

impl MesSettings {
    pub fn for_dim(dim: usize) -> Self {
        MesSettings {
            num_min_samples: 10,
            grid_size: 100 * dim,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.num_min_samples == 0 {
            return Err(Error::InvalidConfig(
                "num_min_samples must be at least 1".into(),
            ));
        }
        if self.grid_size < 50 * dim {
            return Err(Error::InvalidConfig(format!(
                "grid_size {} below 50·D = {}",
                self.grid_size,
                50 * dim
            )));
        }
        Ok(())
    }
}

/// `IΦ(I) + φ(I)`, accurate also deep in the left tail.
fn ei_core(i: f64) -> f64 {
    if i > -20.0 {
        i * norm_cdf(i) + norm_pdf(i)
    } else {
        let r = 1.0 / (i * i);
        norm_pdf(i) * r * (1.0 - 3.0 * r + 15.0 * r * r - 105.0 * r * r * r)
    }
}

/// Expected improvement below `best` for a Gaussian with moments `(mu, sigma)`.
pub fn ei_from_moments(mu: f64, sigma: f64, best: f64) -> f64 {
    if sigma < SIGMA_FLOOR {
        return (best - mu).max(0.0);
    }
    (sigma * ei_core((best - mu) / sigma)).max(0.0)
}

/// Partial derivatives `(∂EI/∂μ, ∂EI/∂σ) = (−Φ(I), φ(I))`.
pub fn ei_gradient(mu: f64, sigma: f64, best: f64) -> (f64, f64) {
    let i = (best - mu) / sigma;
    (-norm_cdf(i), norm_pdf(i))
}

/// Probability of improving on `best`.
pub fn pi_from_moments(mu: f64, sigma: f64, best: f64) -> f64 {
    if sigma < SIGMA_FLOOR {
        return if mu < best {
            1.0
        } else if mu == best {
            0.5
        } else {
            0.0
        };
    }
    norm_cdf((best - mu) / sigma)
}

/// Partial derivatives `(∂PI/∂μ, ∂PI/∂σ) = (−φ(I)/σ, −I φ(I)/σ)`.
pub fn pi_gradient(mu: f64, sigma: f64, best: f64) -> (f64, f64) {
    let i = (best - mu) / sigma;
    let p = norm_pdf(i);
    (-p / sigma, -i * p / sigma)
}

/// Entropy reduction of a Gaussian truncated above at the minimum value:
/// `γφ(γ)/(2Φ(γ)) − ln Φ(γ)`.
pub fn mes_term(gamma: f64) -> f64 {
    let log_cdf = log_norm_cdf(gamma);
    let log_pdf = -0.5 * gamma * gamma - LN_SQRT_2PI;
    let ratio = (log_pdf - log_cdf).exp();
    (0.5 * gamma * ratio - log_cdf).max(0.0)
}

/// Max-value entropy search from posterior moments and minimum-value draws.
pub fn mes_from_moments(mu: f64, sigma: f64, minvals: &[f64]) -> f64 {
    if sigma < SIGMA_FLOOR || minvals.is_empty() {
        return 0.0;
    }
    let total: f64 = minvals.iter().map(|f| mes_term((mu - f) / sigma)).sum();
    (total / minvals.len() as f64).max(0.0)
}

pub fn expected_improvement(g: &GpPosterior, inc: &Incumbent, x: &[f64]) -> f64 {
    let (mu, sigma) = g.predict(x);
    ei_from_moments(mu, sigma, inc.value)
}

pub fn probability_of_improvement(g: &GpPosterior, inc: &Incumbent, x: &[f64]) -> f64 {
    let (mu, sigma) = g.predict(x);
    pi_from_moments(mu, sigma, inc.value)
}

pub fn max_value_entropy_search(g: &GpPosterior, minvals: &[f64], x: &[f64]) -> f64 {
    let (mu, sigma) = g.predict(x);
    mes_from_moments(mu, sigma, minvals)
}

/// Discretization used by the minimum-value sampler: a Latin hypercube over
/// the unit cube followed by the training inputs.
pub fn min_value_grid<'a>(
    training: impl Iterator<Item = &'a [f64]>,
    dim: usize,
    grid_size: usize,
    stream: &mut RandomStream,
) -> Vec<Vec<f64>> {
    let mut grid = latin_hypercube(grid_size, dim, stream);
    grid.extend(training.map(|x| x.to_vec()));
    grid
}

/// `ln P(f* > y)` under independent marginals.
fn log_survival(moments: &[(f64, f64)], y: f64) -> f64 {
    moments
        .iter()
        .map(|&(mu, sigma)| log_norm_cdf((mu - y) / sigma.max(SIGMA_FLOOR)))
        .sum()
}

/// Solve `P(f* > y) = q` by bisection.
fn survival_quantile(moments: &[(f64, f64)], q: f64, lo: f64, hi: f64) -> f64 {
    let target = q.ln();
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_survival(moments, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimum-value draws from a Gumbel fit to the distribution of
/// `min_i f(x_i)` with independent Gaussian marginals `moments`.
/// Draws are capped at `cap`, the best value already observed.
pub fn gumbel_min_draws(
    moments: &[(f64, f64)],
    cap: f64,
    n: usize,
    stream: &mut RandomStream,
) -> Vec<f64> {
    let min_mu = moments.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
    let max_sigma = moments.iter().map(|m| m.1).fold(0.0f64, f64::max);
    let spread = max_sigma.max(1e-9 * min_mu.abs().max(1.0));
    let mut lo = min_mu - spread;
    while log_survival(moments, lo) < 0.95f64.ln() {
        lo -= 2.0 * (min_mu - lo);
    }
    let mut hi = min_mu + spread;
    while log_survival(moments, hi) > 0.05f64.ln() {
        hi += 2.0 * (hi - min_mu);
    }
    // Quartiles of the maximum of −f, expressed through survival levels of f*.
    let m25 = -survival_quantile(moments, 0.25, lo, hi);
    let m50 = -survival_quantile(moments, 0.5, lo, hi);
    let m75 = -survival_quantile(moments, 0.75, lo, hi);
    let beta = (m75 - m25) / (4.0f64.ln().ln() - (4.0f64 / 3.0).ln().ln());
    let beta = beta.max(0.0);
    let a = m50 + beta * 2.0f64.ln().ln();
    (0..n)
        .map(|_| {
            let u = stream.uniform().clamp(1e-300, 1.0 - 1e-16);
            let m = a - beta * (-u.ln()).ln();
            (-m).min(cap)
        })
        .collect()
}

/// Minimum-value draws for MES on a fitted single-fidelity GP.
pub fn sample_min_values(g: &GpPosterior, s: &MesSettings, stream: &mut RandomStream) -> Vec<f64> {
    let grid = min_value_grid(
        g.inputs().iter().map(|x| x.as_slice()),
        g.dim(),
        s.grid_size,
        stream,
    );
    let cap = g.targets().iter().copied().fold(f64::INFINITY, f64::min);
    let moments: Vec<(f64, f64)> = grid.iter().map(|x| g.predict(x)).collect();
    gumbel_min_draws(&moments, cap, s.num_min_samples, stream)
}

/// Settings of [`maximize_acquisition`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizerSettings {
    pub candidates_per_dim: usize,
    pub polish_starts: usize,
    pub iterations: usize,
    pub step_start: f64,
    pub step_end: f64,
}

impl Default for MaximizerSettings {
    fn default() -> Self {
        MaximizerSettings {
            candidates_per_dim: 1000,
            polish_starts: 5,
            iterations: 100,
            step_start: 0.1,
            step_end: 1e-4,
        }
    }
}

pub(crate) fn draw_candidates(
    lo: &[f64],
    hi: &[f64],
    s: &MaximizerSettings,
    stream: &mut RandomStream,
) -> Vec<Vec<f64>> {
    let n = (s.candidates_per_dim * lo.len()).max(1);
    (0..n)
        .map(|_| {
            lo.iter()
                .zip(hi)
                .map(|(a, b)| stream.uniform_in(*a, *b))
                .collect()
        })
        .collect()
}

fn finite_or_worst(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Polish the best raw candidates of a precomputed score table.
pub(crate) fn polish<F>(
    f: &F,
    candidates: &[Vec<f64>],
    scores: &[f64],
    lo: &[f64],
    hi: &[f64],
    s: &MaximizerSettings,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut best = (candidates[order[0]].clone(), scores[order[0]]);
    for &i in order.iter().take(s.polish_starts) {
        let g = |x: &[f64]| finite_or_worst(f(x));
        let (x, v) = pattern_search_max(
            &g,
            &candidates[i],
            scores[i],
            lo,
            hi,
            s.iterations,
            s.step_start,
            s.step_end,
        );
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Maximize `f` over the box `[lo, hi]`: uniform random candidates, then a
/// coordinate pattern search from the best few. Returns the point and its value.
pub fn maximize_acquisition<F>(
    f: &F,
    lo: &[f64],
    hi: &[f64],
    s: &MaximizerSettings,
    stream: &mut RandomStream,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let candidates = draw_candidates(lo, hi, s, stream);
    let scores: Vec<f64> = candidates.iter().map(|x| finite_or_worst(f(x))).collect();
    polish(f, &candidates, &scores, lo, hi, s)
}
