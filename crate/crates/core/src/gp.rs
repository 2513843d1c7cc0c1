//! Single-fidelity Gaussian-process regression with a squared-exponential kernel.
//!
//! Inputs are expected in the unit hypercube. [`fit_gp`] standardizes the
//! targets to zero mean and unit variance before estimating hyperparameters,
//! so fitted [`KernelParams`] are expressed in standardized output units;
//! [`GpPosterior::predict`] always answers in the original units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyper::{self, FitSettings, HyperLayout, TrainingSet};
use crate::math::{spd_factor, RandomStream, SpdFactor, LN_SQRT_2PI};

/// Initial diagonal jitter relative to the signal variance.
pub const JITTER_START: f64 = 1e-13;
/// Largest relative jitter tried before giving up on a factorization.
pub const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Self {
        KernelParams {
            lengthscales,
            signal_variance,
            noise_variance,
        }
    }

    /// Same lengthscale in every dimension.
    pub fn isotropic(
        dim: usize,
        lengthscale: f64,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Self {
        Self::new(vec![lengthscale; dim], signal_variance, noise_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Unit-variance correlation `exp(-Σ (x_d - x2_d)² / (2 ℓ_d²))`.
    pub fn correlation(&self, x: &[f64], x2: &[f64]) -> f64 {
        let s: f64 = x
            .iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum();
        (-0.5 * s).exp()
    }

    #[inline]
    pub(crate) fn cov(&self, x: &[f64], x2: &[f64]) -> f64 {
        self.signal_variance * self.correlation(x, x2)
    }
}

/// Squared-exponential covariance between two points.
pub fn kernel_eval(p: &KernelParams, x: &[f64], x2: &[f64]) -> Result<f64> {
    for v in [x, x2] {
        if v.len() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                got: v.len(),
            });
        }
    }
    Ok(p.cov(x, x2))
}

/// Affine map between model units and output units: `y = offset + scale·z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaling {
    pub offset: f64,
    pub scale: f64,
}

impl TargetScaling {
    pub const IDENTITY: TargetScaling = TargetScaling {
        offset: 0.0,
        scale: 1.0,
    };

    /// Zero mean, unit (population) variance. A constant series keeps scale 1.
    pub fn standardize(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::IDENTITY;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let scale = if var.sqrt() > 1e-12 * mean.abs().max(1.0) {
            var.sqrt()
        } else {
            1.0
        };
        TargetScaling {
            offset: mean,
            scale,
        }
    }

    pub fn to_model(&self, y: f64) -> f64 {
        (y - self.offset) / self.scale
    }

    pub fn to_output(&self, z: f64) -> f64 {
        self.offset + self.scale * z
    }
}

/// Exact GP evidence `log p(y | X, θ)` for the given parameters, without
/// jitter: duplicated inputs with zero noise are reported as
/// [`Error::NotPositiveDefinite`].
pub fn log_marginal_likelihood(
    inputs: &[Vec<f64>],
    targets: &[f64],
    p: &KernelParams,
) -> Result<f64> {
    let n = inputs.len();
    if n == 0 {
        return Err(Error::EmptyInput(
            "log marginal likelihood needs at least one point",
        ));
    }
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: targets.len(),
        });
    }
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_eval(p, &inputs[i], &inputs[j])?;
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
        k[i * n + i] += p.noise_variance;
    }
    let factor = spd_factor(&k, n)?;
    let alpha = factor.solve(targets)?;
    let fit: f64 = targets.iter().zip(&alpha).map(|(y, a)| y * a).sum();
    Ok(-0.5 * fit - 0.5 * factor.log_det() - n as f64 * LN_SQRT_2PI)
}

/// Conditioned single-fidelity GP.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    params: KernelParams,
    scaling: TargetScaling,
    jitter: f64,
    factor: SpdFactor,
    alpha: Vec<f64>,
}

impl GpPosterior {
    /// Condition on raw targets with fixed parameters (identity scaling).
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>, params: KernelParams) -> Result<Self> {
        Self::with_scaling(inputs, targets, params, TargetScaling::IDENTITY)
    }

    /// Condition with fixed parameters; `params` are in the model units of `scaling`.
    pub fn with_scaling(
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        params: KernelParams,
        scaling: TargetScaling,
    ) -> Result<Self> {
        if targets.len() != inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        if let Some(bad) = inputs.iter().find(|x| x.len() != params.dim()) {
            return Err(Error::DimensionMismatch {
                expected: params.dim(),
                got: bad.len(),
            });
        }
        let mut post = GpPosterior {
            inputs,
            targets,
            params,
            scaling,
            jitter: JITTER_START,
            factor: SpdFactor::empty(),
            alpha: Vec::new(),
        };
        post.refactor()?;
        Ok(post)
    }

    fn diag(&self) -> f64 {
        self.params.signal_variance * (1.0 + self.jitter) + self.params.noise_variance
    }

    /// Rebuild the factor, escalating jitter ×10 on failure.
    fn refactor(&mut self) -> Result<()> {
        let n = self.inputs.len();
        loop {
            let mut k = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..i {
                    k[i * n + j] = self.params.cov(&self.inputs[i], &self.inputs[j]);
                }
                k[i * n + i] = self.diag();
            }
            match spd_factor(&k, n) {
                Ok(f) => {
                    self.factor = f;
                    break;
                }
                Err(e) => {
                    if self.jitter * 10.0 > JITTER_MAX * (1.0 + 1e-9) {
                        return Err(e);
                    }
                    self.jitter *= 10.0;
                }
            }
        }
        self.update_alpha();
        Ok(())
    }

    fn update_alpha(&mut self) {
        let z: Vec<f64> = self
            .targets
            .iter()
            .map(|&y| self.scaling.to_model(y))
            .collect();
        let mut alpha = z;
        self.factor.solve_lower_in_place(&mut alpha);
        self.factor.solve_upper_in_place(&mut alpha);
        self.alpha = alpha;
    }

    /// Append an observation keeping the hyperparameters and scaling fixed.
    pub fn add_observation(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if x.len() != self.params.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.params.dim(),
                got: x.len(),
            });
        }
        let mut row: Vec<f64> = self
            .inputs
            .iter()
            .map(|xi| self.params.cov(&x, xi))
            .collect();
        row.push(self.diag());
        self.inputs.push(x);
        self.targets.push(y);
        if self.factor.push_row(&row).is_err() {
            self.jitter *= 10.0;
            if self.jitter > JITTER_MAX * (1.0 + 1e-9) {
                self.inputs.pop();
                self.targets.pop();
                self.jitter /= 10.0;
                return Err(Error::NotPositiveDefinite {
                    row: self.inputs.len(),
                    pivot: 0.0,
                });
            }
            return self.refactor();
        }
        self.update_alpha();
        Ok(())
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn scaling(&self) -> TargetScaling {
        self.scaling
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Relative jitter that was needed to factor the covariance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Observation-noise standard deviation in output units.
    pub fn noise_std(&self) -> f64 {
        self.scaling.scale * self.params.noise_variance.sqrt()
    }

    fn cross(&self, x: &[f64]) -> Vec<f64> {
        self.inputs
            .iter()
            .map(|xi| self.params.cov(x, xi))
            .collect()
    }

    /// Posterior mean and standard deviation of the latent function at `x`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = self.cross(x);
        let mean: f64 = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let mut v = k;
        self.factor.solve_lower_in_place(&mut v);
        let var = (self.params.signal_variance - v.iter().map(|a| a * a).sum::<f64>()).max(0.0);
        (
            self.scaling.to_output(mean),
            self.scaling.scale * var.sqrt(),
        )
    }

    /// Posterior covariance matrix (output units) over a set of points, row-major.
    pub fn posterior_covariance(&self, points: &[Vec<f64>]) -> Vec<f64> {
        let m = points.len();
        let vs: Vec<Vec<f64>> = points
            .iter()
            .map(|p| {
                let mut v = self.cross(p);
                self.factor.solve_lower_in_place(&mut v);
                v
            })
            .collect();
        let s2 = self.scaling.scale * self.scaling.scale;
        let mut cov = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                let prior = self.params.cov(&points[i], &points[j]);
                let reduce: f64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
                let c = s2 * (prior - reduce);
                cov[i * m + j] = c;
                cov[j * m + i] = c;
            }
        }
        cov
    }
}

/// Fit a GP by maximum likelihood (multi-start, bounded log-hyperparameter box).
///
/// Targets are standardized first. When every target is identical the data
/// carry no information about the kernel; a flat posterior is returned with
/// the signal variance at its lower bound.
pub fn fit_gp(
    inputs: &[Vec<f64>],
    targets: &[f64],
    stream: &mut RandomStream,
) -> Result<GpPosterior> {
    fit_gp_with(inputs, targets, &FitSettings::default(), None, stream)
}

/// [`fit_gp`] with explicit optimizer settings and an optional warm start.
pub fn fit_gp_with(
    inputs: &[Vec<f64>],
    targets: &[f64],
    settings: &FitSettings,
    warm_start: Option<&KernelParams>,
    stream: &mut RandomStream,
) -> Result<GpPosterior> {
    let n = inputs.len();
    if n < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least 2 points, got {n}"
        )));
    }
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: targets.len(),
        });
    }
    let dim = inputs[0].len();
    let scaling = TargetScaling::standardize(targets);
    let z: Vec<f64> = targets.iter().map(|&y| scaling.to_model(y)).collect();
    let layout = HyperLayout::new(dim, 1);
    let levels = vec![0usize; n];
    let flat: Vec<f64> = inputs.iter().flatten().copied().collect();
    let data = TrainingSet::new(&flat, dim, &levels, &z)?;
    let warm = warm_start.map(|p| layout.pack(&crate::mfgp::MfKernelParams::single(p.clone())));
    let theta = hyper::fit(&layout, &data, settings, warm.as_deref(), stream);
    let params = layout.unpack(&theta).into_single();
    GpPosterior::with_scaling(inputs.to_vec(), targets.to_vec(), params, scaling)
}
