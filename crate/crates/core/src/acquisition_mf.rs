//! Multi-fidelity acquisitions. Each scores a `(point, level)` pair; the
//! maximizer then picks the best pair across all levels.

use serde::{Deserialize, Serialize};

use crate::acquisition::{
    draw_candidates, ei_from_moments, gumbel_min_draws, mes_term, min_value_grid, pi_from_moments,
    polish, Incumbent, MaximizerSettings, MesSettings, SIGMA_FLOOR,
};
use crate::error::{Error, Result};
use crate::hyper::NOISE_VARIANCE_BOUNDS;
use crate::math::RandomStream;
use crate::mfgp::{LevelMoments, MfGpPosterior};

/// Per-level query costs, strictly increasing with the top level costing 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CostSchedule(Vec<f64>);

impl CostSchedule {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::InvalidConfig("empty cost schedule".into()));
        }
        if costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "costs must be positive: {costs:?}"
            )));
        }
        if costs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(format!(
                "costs must be strictly increasing: {costs:?}"
            )));
        }
        let top = costs[costs.len() - 1];
        if (top - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "top-level cost must be 1, got {top}"
            )));
        }
        Ok(CostSchedule(costs))
    }

    pub fn uniform_single() -> Self {
        CostSchedule(vec![1.0])
    }

    pub fn levels(&self) -> usize {
        self.0.len()
    }

    /// Cost of `level` (1-based).
    pub fn cost(&self, level: usize) -> Result<f64> {
        self.0
            .get(level.wrapping_sub(1))
            .copied()
            .ok_or(Error::LevelOutOfRange {
                level,
                levels: self.0.len(),
            })
    }

    pub fn min_cost(&self) -> f64 {
        self.0[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Costs of the given 1-based levels, rescaled so the last one costs 1.
    pub fn subset(&self, levels: &[usize]) -> Result<Self> {
        let picked = levels
            .iter()
            .map(|&l| self.cost(l))
            .collect::<Result<Vec<_>>>()?;
        let top = *picked.last().ok_or(Error::EmptyInput("fidelity subset"))?;
        CostSchedule::new(picked.iter().map(|c| c / top).collect())
    }
}

impl TryFrom<Vec<f64>> for CostSchedule {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        CostSchedule::new(v)
    }
}

impl From<CostSchedule> for Vec<f64> {
    fn from(c: CostSchedule) -> Self {
        c.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfRecommendation {
    pub x: Vec<f64>,
    pub level: usize,
    pub score: f64,
}

/// Noise standard deviation entering α₂; zero when the fitted noise sits on its floor.
fn effective_noise_std(g: &MfGpPosterior) -> f64 {
    if g.params().noise_variance() <= NOISE_VARIANCE_BOUNDS.0 * (1.0 + 1e-9) {
        0.0
    } else {
        g.noise_std()
    }
}

fn check_costs(g: &MfGpPosterior, costs: &CostSchedule) -> Result<()> {
    if costs.levels() != g.num_levels() {
        return Err(Error::DimensionMismatch {
            expected: g.num_levels(),
            got: costs.levels(),
        });
    }
    Ok(())
}

fn mfei_from(m: &LevelMoments, best: f64, noise_std: f64, cost_ratio: f64) -> f64 {
    let ei = ei_from_moments(m.mean_top, m.std_top, best);
    let alpha1 = m.corr.abs();
    let alpha2 = if noise_std > 0.0 {
        1.0 - noise_std / (m.std_level * m.std_level + noise_std * noise_std).sqrt()
    } else {
        1.0
    };
    (ei * alpha1 * alpha2 * cost_ratio).max(0.0)
}

fn density_penalty(g: &MfGpPosterior, x: &[f64], level: usize) -> f64 {
    let kernel = &g.params().levels[0];
    g.inputs_at_level(level)
        .map(|xi| 1.0 - kernel.correlation(x, xi))
        .product::<f64>()
        .max(0.0)
}

fn mfpi_from(m: &LevelMoments, best: f64, cost_ratio: f64, eta3: f64) -> f64 {
    (pi_from_moments(m.mean_top, m.std_top, best) * m.corr.abs() * cost_ratio * eta3).max(0.0)
}

fn mfmes_from(m: &LevelMoments, minvals: &[f64], cost: f64) -> f64 {
    if m.std_top < SIGMA_FLOOR || minvals.is_empty() || m.corr == 0.0 {
        return 0.0;
    }
    let mean: f64 = minvals
        .iter()
        .map(|f| mes_term((m.mean_top - f) / m.std_top))
        .sum::<f64>()
        / minvals.len() as f64;
    (m.corr * m.corr * mean / cost).max(0.0)
}

/// Multi-fidelity expected improvement: top-level EI scaled by the
/// correlation, noise and cost factors of `level`.
pub fn mfei(
    g: &MfGpPosterior,
    inc: &Incumbent,
    costs: &CostSchedule,
    x: &[f64],
    level: usize,
) -> Result<f64> {
    check_costs(g, costs)?;
    let m = g.level_moments(x, level)?;
    let ratio = costs.cost(g.num_levels())? / costs.cost(level)?;
    Ok(mfei_from(&m, inc.value, effective_noise_std(g), ratio))
}

/// Multi-fidelity probability of improvement, including the sample density
/// penalty over points already observed at `level`.
pub fn mfpi(
    g: &MfGpPosterior,
    inc: &Incumbent,
    costs: &CostSchedule,
    x: &[f64],
    level: usize,
) -> Result<f64> {
    check_costs(g, costs)?;
    let m = g.level_moments(x, level)?;
    let ratio = costs.cost(g.num_levels())? / costs.cost(level)?;
    Ok(mfpi_from(
        &m,
        inc.value,
        ratio,
        density_penalty(g, x, level),
    ))
}

/// Multi-fidelity max-value entropy search per unit cost.
pub fn mfmes(
    g: &MfGpPosterior,
    minvals: &[f64],
    costs: &CostSchedule,
    x: &[f64],
    level: usize,
) -> Result<f64> {
    check_costs(g, costs)?;
    let m = g.level_moments(x, level)?;
    Ok(mfmes_from(&m, minvals, costs.cost(level)?))
}

/// Top-level minimum-value draws of a multi-fidelity posterior.
pub fn sample_min_values_mf(
    g: &MfGpPosterior,
    s: &MesSettings,
    stream: &mut RandomStream,
) -> Vec<f64> {
    let top = g.num_levels();
    let grid = min_value_grid(g.inputs_at_level(top), g.dim(), s.grid_size, stream);
    let cap = g.best_at_level(top).map(|b| b.1).unwrap_or(f64::INFINITY);
    let moments: Vec<(f64, f64)> = grid
        .iter()
        .map(|x| g.predict_level(x, top).expect("top level exists"))
        .collect();
    gumbel_min_draws(&moments, cap, s.num_min_samples, stream)
}

/// Something that scores `(point, level)` pairs for [`maximize_mf_acquisition`].
pub trait MfEvaluator {
    fn num_levels(&self) -> usize;

    fn score(&self, x: &[f64], level: usize) -> f64;

    /// Scores of every level at `x`; override when a joint pass is cheaper.
    fn score_all(&self, x: &[f64]) -> Vec<f64> {
        (1..=self.num_levels()).map(|l| self.score(x, l)).collect()
    }
}

/// Adapter turning a closure into an [`MfEvaluator`].
pub struct FnEvaluator<F> {
    pub levels: usize,
    pub f: F,
}

impl<F: Fn(&[f64], usize) -> f64> MfEvaluator for FnEvaluator<F> {
    fn num_levels(&self) -> usize {
        self.levels
    }

    fn score(&self, x: &[f64], level: usize) -> f64 {
        (self.f)(x, level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MfKind {
    Ei,
    Pi,
    Mes,
}

/// A multi-fidelity acquisition bound to a posterior.
pub struct MfAcquisition<'a> {
    pub kind: MfKind,
    pub posterior: &'a MfGpPosterior,
    pub costs: &'a CostSchedule,
    pub incumbent: f64,
    /// Minimum-value draws, used by [`MfKind::Mes`].
    pub minvals: &'a [f64],
}

impl MfAcquisition<'_> {
    fn score_moments(&self, x: &[f64], m: &LevelMoments, level: usize, noise_std: f64) -> f64 {
        let c = self.costs.as_slice();
        let cost = c[level - 1];
        let ratio = c[c.len() - 1] / cost;
        match self.kind {
            MfKind::Ei => mfei_from(m, self.incumbent, noise_std, ratio),
            MfKind::Pi => mfpi_from(
                m,
                self.incumbent,
                ratio,
                density_penalty(self.posterior, x, level),
            ),
            MfKind::Mes => mfmes_from(m, self.minvals, cost),
        }
    }
}

impl MfEvaluator for MfAcquisition<'_> {
    fn num_levels(&self) -> usize {
        self.posterior.num_levels()
    }

    fn score(&self, x: &[f64], level: usize) -> f64 {
        match self.posterior.level_moments(x, level) {
            Ok(m) => self.score_moments(x, &m, level, effective_noise_std(self.posterior)),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    fn score_all(&self, x: &[f64]) -> Vec<f64> {
        let s = self.posterior.level_slice(x);
        let top = s.mean.len() - 1;
        let noise = effective_noise_std(self.posterior);
        (0..s.mean.len())
            .map(|a| {
                let m = LevelMoments {
                    mean_top: s.mean[top],
                    std_top: s.std[top],
                    std_level: s.std[a],
                    corr: s.corr_top[a],
                };
                self.score_moments(x, &m, a + 1, noise)
            })
            .collect()
    }
}

/// Maximize over points and levels. Every level shares one candidate set;
/// ties go to the higher level.
pub fn maximize_mf_acquisition<E: MfEvaluator + ?Sized>(
    e: &E,
    lo: &[f64],
    hi: &[f64],
    s: &MaximizerSettings,
    stream: &mut RandomStream,
) -> MfRecommendation {
    let levels = e.num_levels();
    let candidates = draw_candidates(lo, hi, s, stream);
    let table: Vec<Vec<f64>> = candidates.iter().map(|x| e.score_all(x)).collect();
    let mut best: Option<MfRecommendation> = None;
    for level in 1..=levels {
        let scores: Vec<f64> = table
            .iter()
            .map(|row| {
                if row[level - 1].is_nan() {
                    f64::NEG_INFINITY
                } else {
                    row[level - 1]
                }
            })
            .collect();
        let f = |x: &[f64]| e.score(x, level);
        let (x, score) = polish(&f, &candidates, &scores, lo, hi, s);
        if best.as_ref().map_or(true, |b| score >= b.score) {
            best = Some(MfRecommendation { x, level, score });
        }
    }
    best.expect("at least one level")
}
