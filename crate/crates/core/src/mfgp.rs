//! Autoregressive multi-fidelity Gaussian process.
//!
//! Level `l` is modelled as `f(l) = ρ_l · f(l-1) + ζ_l` with independent
//! squared-exponential discrepancy processes `ζ_l` and one constant scaling
//! factor per adjacent pair of levels. All observations, whatever their level,
//! are conditioned on jointly through a single factorization of the induced
//! covariance. Levels are 1-based in the public API; level `L` is the most
//! accurate one.

use serde::{Deserialize, Serialize};

use crate::data::ObservationSet;
use crate::error::{Error, Result};
use crate::gp::{KernelParams, TargetScaling, JITTER_MAX, JITTER_START};
use crate::hyper::{self, joint_cov, prior_var, rho_chain, FitSettings, HyperLayout, TrainingSet};
use crate::math::{RandomStream, SpdFactor};

/// Per-level kernels plus the scaling factors `ρ_2..ρ_L`.
///
/// `levels[0]` is the covariance of the lowest fidelity, `levels[l]` for
/// `l ≥ 1` the covariance of the discrepancy entering level `l + 1`. The
/// observation noise is shared by all levels and read from `levels[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfKernelParams {
    pub levels: Vec<KernelParams>,
    pub rho: Vec<f64>,
}

impl MfKernelParams {
    pub fn single(p: KernelParams) -> Self {
        MfKernelParams {
            levels: vec![p],
            rho: Vec::new(),
        }
    }

    pub fn into_single(mut self) -> KernelParams {
        self.levels.swap_remove(0)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim()
    }

    pub fn noise_variance(&self) -> f64 {
        self.levels[0].noise_variance
    }

    fn check_level(&self, level: usize) -> Result<usize> {
        if level == 0 || level > self.num_levels() {
            Err(Error::LevelOutOfRange {
                level,
                levels: self.num_levels(),
            })
        } else {
            Ok(level - 1)
        }
    }
}

/// Prior covariance between `(x, l)` and `(x2, l2)` under the autoregressive model.
pub fn mf_kernel_eval(
    p: &MfKernelParams,
    x: &[f64],
    l: usize,
    x2: &[f64],
    l2: usize,
) -> Result<f64> {
    let a = p.check_level(l)?;
    let b = p.check_level(l2)?;
    for v in [x, x2] {
        if v.len() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                got: v.len(),
            });
        }
    }
    let chain = rho_chain(&p.rho, p.num_levels());
    Ok(joint_cov(p, &chain, x, a, x2, b))
}

/// Standardization for mixed-fidelity targets: each level is centred on its
/// own mean and all levels share one scale (population standard deviation of
/// the centred values). With one level this is plain standardization.
pub fn standardize_levels(
    targets: &[f64],
    levels: &[usize],
    num_levels: usize,
) -> Vec<TargetScaling> {
    let means: Vec<f64> = (1..=num_levels)
        .map(|l| {
            let vals: Vec<f64> = targets
                .iter()
                .zip(levels)
                .filter(|(_, &lv)| lv == l)
                .map(|(y, _)| *y)
                .collect();
            if vals.is_empty() {
                0.0
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        })
        .collect();
    let n = targets.len().max(1) as f64;
    let var = targets
        .iter()
        .zip(levels)
        .map(|(y, &l)| (y - means[l - 1]).powi(2))
        .sum::<f64>()
        / n;
    let biggest = means.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if var.sqrt() > 1e-12 * biggest.max(1.0) {
        var.sqrt()
    } else {
        1.0
    };
    means
        .into_iter()
        .map(|offset| TargetScaling { offset, scale })
        .collect()
}

/// Posterior moments of every level at one input point (output units).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSlice {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Posterior correlation of each level with the top level.
    pub corr_top: Vec<f64>,
}

/// What the multi-fidelity acquisitions need at one `(x, level)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelMoments {
    pub mean_top: f64,
    pub std_top: f64,
    pub std_level: f64,
    pub corr: f64,
}

#[derive(Debug, Clone)]
pub struct MfGpPosterior {
    inputs: Vec<Vec<f64>>,
    levels: Vec<usize>,
    targets: Vec<f64>,
    params: MfKernelParams,
    scalings: Vec<TargetScaling>,
    chain: Vec<Vec<f64>>,
    jitter: f64,
    factor: SpdFactor,
    alpha: Vec<f64>,
}

impl MfGpPosterior {
    /// Condition on raw targets with fixed parameters (no standardization).
    /// The observation set may be empty, giving the prior.
    pub fn new(data: &ObservationSet, params: MfKernelParams) -> Result<Self> {
        let scalings = vec![TargetScaling::IDENTITY; params.num_levels()];
        Self::with_scaling(data, params, scalings)
    }

    pub fn with_scaling(
        data: &ObservationSet,
        params: MfKernelParams,
        scalings: Vec<TargetScaling>,
    ) -> Result<Self> {
        let dim = params.dim();
        for o in data.iter() {
            params.check_level(o.level)?;
            if o.x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: o.x.len(),
                });
            }
        }
        if scalings.len() != params.num_levels() {
            return Err(Error::DimensionMismatch {
                expected: params.num_levels(),
                got: scalings.len(),
            });
        }
        let chain = rho_chain(&params.rho, params.num_levels());
        let mut post = MfGpPosterior {
            inputs: data.iter().map(|o| o.x.clone()).collect(),
            levels: data.iter().map(|o| o.level).collect(),
            targets: data.iter().map(|o| o.y).collect(),
            params,
            scalings,
            chain,
            jitter: JITTER_START,
            factor: SpdFactor::empty(),
            alpha: Vec::new(),
        };
        post.refactor()?;
        Ok(post)
    }

    fn refactor(&mut self) -> Result<()> {
        let dim = self.params.dim();
        let flat: Vec<f64> = self.inputs.iter().flatten().copied().collect();
        let lv: Vec<usize> = self.levels.iter().map(|l| l - 1).collect();
        let z = self.model_targets();
        let data = TrainingSet::new(&flat, dim, &lv, &z)?;
        let (factor, jitter) = hyper::factor_training(&self.params, &data)?;
        self.factor = factor;
        self.jitter = jitter;
        self.update_alpha();
        Ok(())
    }

    fn model_targets(&self) -> Vec<f64> {
        self.targets
            .iter()
            .zip(&self.levels)
            .map(|(y, l)| self.scalings[l - 1].to_model(*y))
            .collect()
    }

    fn update_alpha(&mut self) {
        let mut alpha = self.model_targets();
        self.factor.solve_lower_in_place(&mut alpha);
        self.factor.solve_upper_in_place(&mut alpha);
        self.alpha = alpha;
    }

    fn diag(&self, a: usize) -> f64 {
        prior_var(&self.params, &self.chain, a) * (1.0 + self.jitter) + self.params.noise_variance()
    }

    /// Append an observation keeping hyperparameters and scaling fixed.
    pub fn add_observation(&mut self, x: Vec<f64>, level: usize, y: f64) -> Result<()> {
        let a = self.params.check_level(level)?;
        if x.len() != self.params.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.params.dim(),
                got: x.len(),
            });
        }
        let mut row: Vec<f64> = self
            .inputs
            .iter()
            .zip(&self.levels)
            .map(|(xi, li)| joint_cov(&self.params, &self.chain, &x, a, xi, li - 1))
            .collect();
        row.push(self.diag(a));
        self.inputs.push(x);
        self.levels.push(level);
        self.targets.push(y);
        if self.factor.push_row(&row).is_err() {
            if self.jitter * 10.0 > JITTER_MAX * (1.0 + 1e-9) {
                self.inputs.pop();
                self.levels.pop();
                self.targets.pop();
                return Err(Error::NotPositiveDefinite {
                    row: self.inputs.len(),
                    pivot: 0.0,
                });
            }
            // Rebuild from scratch; factor_training escalates further if needed.
            return self.refactor();
        }
        self.update_alpha();
        Ok(())
    }

    pub fn params(&self) -> &MfKernelParams {
        &self.params
    }

    pub fn num_levels(&self) -> usize {
        self.params.num_levels()
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn scalings(&self) -> &[TargetScaling] {
        &self.scalings
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Training inputs observed at `level`.
    pub fn inputs_at_level(&self, level: usize) -> impl Iterator<Item = &[f64]> {
        self.inputs
            .iter()
            .zip(&self.levels)
            .filter(move |(_, &l)| l == level)
            .map(|(x, _)| x.as_slice())
    }

    /// Best (lowest) target observed at `level`.
    pub fn best_at_level(&self, level: usize) -> Option<(Vec<f64>, f64)> {
        self.inputs
            .iter()
            .zip(&self.levels)
            .zip(&self.targets)
            .filter(|((_, &l), _)| l == level)
            .fold(
                None,
                |best: Option<(&Vec<f64>, f64)>, ((x, _), &y)| match best {
                    Some((_, by)) if by <= y => best,
                    _ => Some((x, y)),
                },
            )
            .map(|(x, y)| (x.clone(), y))
    }

    /// Observation-noise standard deviation in output units.
    pub fn noise_std(&self) -> f64 {
        self.scalings[0].scale * self.params.noise_variance().sqrt()
    }

    /// Base kernel values `κ_j(x, x_i)` for every training point and every
    /// level `j ≤ level(x_i)`, stored `[i * L + j]`.
    fn base_cross(&self, x: &[f64]) -> Vec<f64> {
        let nl = self.num_levels();
        let mut out = vec![0.0; self.inputs.len() * nl];
        for (i, (xi, li)) in self.inputs.iter().zip(&self.levels).enumerate() {
            for j in 0..*li {
                out[i * nl + j] = self.params.levels[j].cov(x, xi);
            }
        }
        out
    }

    /// `L⁻¹ k` for the query `(x, a)` (0-based level).
    fn whitened(&self, base: &[f64], a: usize) -> Vec<f64> {
        let nl = self.num_levels();
        let mut k: Vec<f64> = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, li)| {
                let b = li - 1;
                (0..=a.min(b))
                    .map(|j| self.chain[j][a] * self.chain[j][b] * base[i * nl + j])
                    .sum()
            })
            .collect();
        let mean: f64 = k.iter().zip(&self.alpha).map(|(p, q)| p * q).sum();
        self.factor.solve_lower_in_place(&mut k);
        k.push(mean);
        k
    }

    /// Posterior mean and standard deviation of level `level` at `x`.
    pub fn predict_level(&self, x: &[f64], level: usize) -> Result<(f64, f64)> {
        let a = self.params.check_level(level)?;
        let base = self.base_cross(x);
        let mut v = self.whitened(&base, a);
        let mean = v.pop().unwrap_or(0.0);
        let var = (prior_var(&self.params, &self.chain, a) - v.iter().map(|t| t * t).sum::<f64>())
            .max(0.0);
        let s = &self.scalings[a];
        Ok((s.to_output(mean), s.scale * var.sqrt()))
    }

    /// Posterior correlation between `f(level)` and `f(L)` at `x`.
    ///
    /// Returns 1 at the top level and 0 when either posterior standard
    /// deviation is below `1e-12`.
    pub fn posterior_correlation(&self, x: &[f64], level: usize) -> Result<f64> {
        let a = self.params.check_level(level)?;
        let top = self.num_levels() - 1;
        if a == top {
            return Ok(1.0);
        }
        let base = self.base_cross(x);
        let mut va = self.whitened(&base, a);
        let mut vt = self.whitened(&base, top);
        va.pop();
        vt.pop();
        Ok(self.correlation_from(x, a, &va, top, &vt))
    }

    fn correlation_from(&self, x: &[f64], a: usize, va: &[f64], top: usize, vt: &[f64]) -> f64 {
        let scale = self.scalings[0].scale;
        let var_a = (prior_var(&self.params, &self.chain, a)
            - va.iter().map(|t| t * t).sum::<f64>())
        .max(0.0);
        let var_t = (prior_var(&self.params, &self.chain, top)
            - vt.iter().map(|t| t * t).sum::<f64>())
        .max(0.0);
        if scale * var_a.sqrt() < 1e-12 || scale * var_t.sqrt() < 1e-12 {
            return 0.0;
        }
        let cov = joint_cov(&self.params, &self.chain, x, a, x, top)
            - va.iter().zip(vt).map(|(p, q)| p * q).sum::<f64>();
        (cov / (var_a.sqrt() * var_t.sqrt())).clamp(-1.0, 1.0)
    }

    /// Top-level moments together with the standard deviation of `level` and
    /// its correlation with the top level; two triangular solves.
    pub fn level_moments(&self, x: &[f64], level: usize) -> Result<LevelMoments> {
        let a = self.params.check_level(level)?;
        let top = self.num_levels() - 1;
        let base = self.base_cross(x);
        let mut vt = self.whitened(&base, top);
        let mean_top = vt.pop().unwrap_or(0.0);
        let var_t = (prior_var(&self.params, &self.chain, top)
            - vt.iter().map(|t| t * t).sum::<f64>())
        .max(0.0);
        let std_top = self.scalings[top].scale * var_t.sqrt();
        let (std_level, corr) = if a == top {
            (std_top, 1.0)
        } else {
            let mut va = self.whitened(&base, a);
            va.pop();
            let var_a = (prior_var(&self.params, &self.chain, a)
                - va.iter().map(|t| t * t).sum::<f64>())
            .max(0.0);
            (
                self.scalings[a].scale * var_a.sqrt(),
                self.correlation_from(x, a, &va, top, &vt),
            )
        };
        Ok(LevelMoments {
            mean_top: self.scalings[top].to_output(mean_top),
            std_top,
            std_level,
            corr,
        })
    }

    /// Moments of all levels at `x` from one pass over the training data.
    pub fn level_slice(&self, x: &[f64]) -> LevelSlice {
        let nl = self.num_levels();
        let top = nl - 1;
        let base = self.base_cross(x);
        let whitened: Vec<Vec<f64>> = (0..nl).map(|a| self.whitened(&base, a)).collect();
        let mut mean = Vec::with_capacity(nl);
        let mut std = Vec::with_capacity(nl);
        let mut corr_top = Vec::with_capacity(nl);
        for (a, w) in whitened.iter().enumerate() {
            let (v, m) = w.split_at(w.len() - 1);
            let var = (prior_var(&self.params, &self.chain, a)
                - v.iter().map(|t| t * t).sum::<f64>())
            .max(0.0);
            let s = &self.scalings[a];
            mean.push(s.to_output(m[0]));
            std.push(s.scale * var.sqrt());
            corr_top.push(if a == top {
                1.0
            } else {
                let vt = &whitened[top][..whitened[top].len() - 1];
                self.correlation_from(x, a, v, top, vt)
            });
        }
        LevelSlice {
            mean,
            std,
            corr_top,
        }
    }
}

/// Joint maximum-likelihood fit over all levels.
///
/// Observation levels must lie in `1..=num_levels`, with at least two points
/// at level 1 and at least one at every level.
pub fn fit_mf_gp(
    data: &ObservationSet,
    num_levels: usize,
    stream: &mut RandomStream,
) -> Result<MfGpPosterior> {
    fit_mf_gp_with(data, num_levels, &FitSettings::default(), None, stream)
}

pub fn fit_mf_gp_with(
    data: &ObservationSet,
    num_levels: usize,
    settings: &FitSettings,
    warm_start: Option<&MfKernelParams>,
    stream: &mut RandomStream,
) -> Result<MfGpPosterior> {
    if num_levels == 0 || data.is_empty() {
        return Err(Error::DegenerateData("no observations".into()));
    }
    for o in data.iter() {
        if o.level == 0 || o.level > num_levels {
            return Err(Error::LevelOutOfRange {
                level: o.level,
                levels: num_levels,
            });
        }
    }
    // One level with a single point is still a valid sub-case of the L = 1 model.
    if data.count_at_level(1) < 2 && num_levels > 1 || data.len() < 2 {
        return Err(Error::DegenerateData(
            "need at least 2 points at level 1".into(),
        ));
    }
    if let Some(l) = (1..=num_levels).find(|&l| data.count_at_level(l) == 0) {
        return Err(Error::DegenerateData(format!(
            "no observations at level {l}"
        )));
    }
    let dim = data.as_slice()[0].x.len();
    let targets: Vec<f64> = data.iter().map(|o| o.y).collect();
    let levels1: Vec<usize> = data.iter().map(|o| o.level).collect();
    let scalings = standardize_levels(&targets, &levels1, num_levels);
    let z: Vec<f64> = data
        .iter()
        .map(|o| scalings[o.level - 1].to_model(o.y))
        .collect();
    let levels0: Vec<usize> = levels1.iter().map(|l| l - 1).collect();
    let flat: Vec<f64> = data.iter().flat_map(|o| o.x.iter().copied()).collect();
    let layout = HyperLayout::new(dim, num_levels);
    let set = TrainingSet::new(&flat, dim, &levels0, &z)?;
    let warm = warm_start.map(|p| layout.pack(p));
    let theta = hyper::fit(&layout, &set, settings, warm.as_deref(), stream);
    MfGpPosterior::with_scaling(data, layout.unpack(&theta), scalings)
}
