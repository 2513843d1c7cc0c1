//! The optimization loop: initial design, surrogate refit, acquisition
//! maximization, budget accounting and stopping.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acquisition::{
    expected_improvement, max_value_entropy_search, maximize_acquisition,
    probability_of_improvement, sample_min_values, Incumbent, MaximizerSettings, MesSettings,
};
use crate::acquisition_mf::{
    maximize_mf_acquisition, sample_min_values_mf, CostSchedule, MfAcquisition, MfEvaluator, MfKind,
};
use crate::benchmarks::{lookup, FidelityFamily};
use crate::data::{Observation, ObservationSet};
use crate::error::{Error, Result};
use crate::gp::{fit_gp_with, KernelParams};
use crate::hyper::FitSettings;
use crate::math::{latin_hypercube, RandomStream};
use crate::metrics::{compute_metrics, MetricPoint};
use crate::mfgp::{fit_mf_gp_with, MfKernelParams};

/// Slack allowed when comparing accumulated budgets.
const BUDGET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionKind {
    Ei,
    Pi,
    Mes,
    Mfei,
    Mfpi,
    Mfmes,
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 6] = [
        AcquisitionKind::Ei,
        AcquisitionKind::Pi,
        AcquisitionKind::Mes,
        AcquisitionKind::Mfei,
        AcquisitionKind::Mfpi,
        AcquisitionKind::Mfmes,
    ];

    pub fn is_multi_fidelity(self) -> bool {
        self.mf_kind().is_some()
    }

    pub fn mf_kind(self) -> Option<MfKind> {
        match self {
            AcquisitionKind::Mfei => Some(MfKind::Ei),
            AcquisitionKind::Mfpi => Some(MfKind::Pi),
            AcquisitionKind::Mfmes => Some(MfKind::Mes),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::Pi => "pi",
            AcquisitionKind::Mes => "mes",
            AcquisitionKind::Mfei => "mfei",
            AcquisitionKind::Mfpi => "mfpi",
            AcquisitionKind::Mfmes => "mfmes",
        }
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AcquisitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        AcquisitionKind::ALL
            .into_iter()
            .find(|k| k.label() == lower)
            .ok_or_else(|| Error::UnknownAcquisition(s.to_string()))
    }
}

/// How often the surrogate hyperparameters are re-estimated from scratch.
/// In between, the previous estimate seeds a single local search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefitSchedule {
    /// A full multi-start fit runs on iterations `1, 1 + k, 1 + 2k, ...`.
    pub full_every: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Iteration cap of the warm-started local search.
    pub warm_max_iter: usize,
}

impl Default for RefitSchedule {
    fn default() -> Self {
        RefitSchedule {
            full_every: 10,
            restarts: 10,
            max_iter: 200,
            warm_max_iter: 50,
        }
    }
}

impl RefitSchedule {
    fn settings(&self, iteration: usize) -> FitSettings {
        if self.full_every > 0 && (iteration - 1) % self.full_every == 0 {
            FitSettings {
                restarts: self.restarts,
                max_iter: self.max_iter,
            }
        } else {
            FitSettings {
                restarts: 0,
                max_iter: self.warm_max_iter,
            }
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub benchmark: String,
    pub acquisition: AcquisitionKind,
    /// Active fidelity levels of the family, ascending; the last one must
    /// be the family's top level.
    pub levels: Vec<usize>,
    /// Initial design size per active level.
    pub initial_sizes: Vec<usize>,
    pub b_max: f64,
    pub trials: usize,
    pub seed: u64,
    pub mes: MesSettings,
    /// Replacement for the family's cost schedule (all levels).
    pub costs: Option<Vec<f64>>,
    pub charge_initial_design: bool,
    pub maximizer: MaximizerSettings,
    pub refit: RefitSchedule,
}

impl ExperimentConfig {
    /// Defaults: every level for multi-fidelity acquisitions and only the top
    /// level otherwise, `D + 2` initial points at the top level and
    /// `2(D + 2)` below, `B_max = 100·D`, 10 trials.
    pub fn new(benchmark: &str, acquisition: AcquisitionKind) -> Result<Self> {
        let family = lookup(benchmark)?;
        let levels: Vec<usize> = if acquisition.is_multi_fidelity() {
            (1..=family.levels).collect()
        } else {
            vec![family.levels]
        };
        let mut cfg = ExperimentConfig {
            benchmark: family.name.clone(),
            acquisition,
            levels: Vec::new(),
            initial_sizes: Vec::new(),
            b_max: 100.0 * family.dim as f64,
            trials: 10,
            seed: 0,
            mes: MesSettings::for_dim(family.dim),
            costs: None,
            charge_initial_design: false,
            maximizer: MaximizerSettings::default(),
            refit: RefitSchedule::default(),
        };
        cfg.set_levels(levels, family.dim);
        Ok(cfg)
    }

    /// Replace the active levels and reset the initial sizes to their defaults.
    pub fn set_levels(&mut self, levels: Vec<usize>, dim: usize) {
        let n = levels.len();
        self.initial_sizes = (0..n)
            .map(|i| if i + 1 == n { dim + 2 } else { 2 * (dim + 2) })
            .collect();
        self.levels = levels;
    }

    /// Check the configuration and return the family with any cost override
    /// applied.
    pub fn resolve(&self) -> Result<FidelityFamily> {
        let mut family = lookup(&self.benchmark)?;
        if let Some(c) = &self.costs {
            if c.len() != family.levels {
                return Err(Error::InvalidConfig(format!(
                    "cost override has {} entries, `{}` has {} levels",
                    c.len(),
                    family.name,
                    family.levels
                )));
            }
            family.costs = CostSchedule::new(c.clone())?;
        }
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.levels.is_empty() {
            return bad("no active levels".into());
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!(
                "levels must be strictly increasing: {:?}",
                self.levels
            ));
        }
        if self.levels[0] == 0 || *self.levels.last().unwrap() != family.levels {
            return bad(format!(
                "levels {:?} must lie in 1..={} and end with the top level",
                self.levels, family.levels
            ));
        }
        if self.acquisition.is_multi_fidelity() && self.levels.len() < 2 {
            return bad(format!("{} needs at least two levels", self.acquisition));
        }
        if !self.acquisition.is_multi_fidelity() && self.levels.len() != 1 {
            return bad(format!("{} uses the top level only", self.acquisition));
        }
        if self.initial_sizes.len() != self.levels.len() {
            return bad(format!(
                "{} initial sizes for {} levels",
                self.initial_sizes.len(),
                self.levels.len()
            ));
        }
        if self.initial_sizes.iter().any(|&n| n == 0) || *self.initial_sizes.last().unwrap() < 2 {
            return bad("initial sizes must be at least 1, and at least 2 at the top level".into());
        }
        if self.acquisition.is_multi_fidelity() && self.initial_sizes[0] < 2 {
            return bad("the lowest level needs at least 2 initial points".into());
        }
        if !(self.b_max.is_finite() && self.b_max > 0.0) {
            return bad(format!("b_max must be positive, got {}", self.b_max));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.maximizer.candidates_per_dim == 0 {
            return bad("candidates_per_dim must be at least 1".into());
        }
        self.mes.validate(family.dim)?;
        Ok(family)
    }

    /// Costs of the active levels.
    pub fn active_costs(&self, family: &FidelityFamily) -> Result<CostSchedule> {
        family.costs.subset(&self.levels)
    }
}

/// One adaptive query and the incumbent after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    /// Query location in domain units.
    pub x: Vec<f64>,
    /// Family fidelity level of the query.
    pub level: usize,
    pub y: f64,
    pub incumbent: f64,
    pub incumbent_x: Vec<f64>,
    pub metrics: MetricPoint,
}

/// Incumbent after the initial design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub incumbent_x: Vec<f64>,
    pub incumbent: f64,
    pub metrics: MetricPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialStatus {
    BudgetExhausted,
    /// The caller asked to stop before the budget ran out.
    Stopped,
    Failed {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub trial: usize,
    pub seed: u64,
    pub b_max: f64,
    pub initial: InitialState,
    pub records: Vec<StepRecord>,
    pub status: TrialStatus,
}

/// Latin hypercube designs in the unit cube, one per active level, evaluated
/// at the matching fidelity. Each family level draws its design from its own
/// fork of `stream`, so runs with different active sets share the designs of
/// common levels. Observation levels are ranks within the active set.
pub fn initial_design(
    cfg: &ExperimentConfig,
    family: &FidelityFamily,
    stream: &mut RandomStream,
) -> Result<ObservationSet> {
    let mut forks: Vec<RandomStream> = (0..family.levels).map(|_| stream.fork()).collect();
    let mut data = ObservationSet::new();
    for (rank, (&level, &n)) in cfg.levels.iter().zip(&cfg.initial_sizes).enumerate() {
        let s = forks.get_mut(level - 1).ok_or(Error::LevelOutOfRange {
            level,
            levels: family.levels,
        })?;
        for u in latin_hypercube(n, family.dim, s) {
            let y = family.evaluate(level, &family.from_unit(&u), s)?;
            data.push(Observation {
                x: u,
                level: rank + 1,
                y,
            });
        }
    }
    Ok(data)
}

/// Forbids levels whose cost no longer fits in the budget. Costs increase
/// with level, so the affordable levels are a prefix.
struct Affordable<'a, E> {
    inner: &'a E,
    max_level: usize,
}

impl<E: MfEvaluator> MfEvaluator for Affordable<'_, E> {
    fn num_levels(&self) -> usize {
        self.inner.num_levels()
    }

    fn score(&self, x: &[f64], level: usize) -> f64 {
        if level > self.max_level {
            f64::NEG_INFINITY
        } else {
            self.inner.score(x, level)
        }
    }

    fn score_all(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.inner.score_all(x);
        s.iter_mut()
            .skip(self.max_level)
            .for_each(|v| *v = f64::NEG_INFINITY);
        s
    }
}

/// State of one trial.
pub struct Engine {
    cfg: ExperimentConfig,
    family: FidelityFamily,
    costs: CostSchedule,
    data: ObservationSet,
    budget: f64,
    iteration: usize,
    incumbent: Observation,
    stream: RandomStream,
    eval_stream: RandomStream,
    sf_params: Option<KernelParams>,
    mf_params: Option<MfKernelParams>,
}

impl Engine {
    /// Validate `cfg` and run the initial design of trial `trial`.
    pub fn new(cfg: &ExperimentConfig, trial: usize) -> Result<Self> {
        let family = cfg.resolve()?;
        let costs = cfg.active_costs(&family)?;
        let mut stream = RandomStream::with_stream(cfg.seed, trial as u64);
        let data = initial_design(cfg, &family, &mut stream.fork())?;
        let eval_stream = stream.fork();
        let top = costs.levels();
        let incumbent = data
            .best_at_level(top)
            .expect("top level has initial points")
            .clone();
        let budget = if cfg.charge_initial_design {
            data.iter().map(|o| costs.as_slice()[o.level - 1]).sum()
        } else {
            0.0
        };
        Ok(Engine {
            cfg: cfg.clone(),
            family,
            costs,
            data,
            budget,
            iteration: 0,
            incumbent,
            stream,
            eval_stream,
            sf_params: None,
            mf_params: None,
        })
    }

    pub fn family(&self) -> &FidelityFamily {
        &self.family
    }

    pub fn data(&self) -> &ObservationSet {
        &self.data
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Best top-level observation so far (input in the unit cube).
    pub fn incumbent(&self) -> &Observation {
        &self.incumbent
    }

    pub fn initial_state(&self) -> Result<InitialState> {
        let x = self.family.from_unit(&self.incumbent.x);
        Ok(InitialState {
            metrics: compute_metrics(&self.family, &x, self.budget)?,
            incumbent_x: x,
            incumbent: self.incumbent.y,
        })
    }

    /// Highest affordable active level (as a rank), or `None` once the
    /// cheapest level no longer fits.
    fn affordable(&self) -> Option<usize> {
        let c = self.costs.as_slice();
        let left = self.cfg.b_max - self.budget + BUDGET_TOLERANCE;
        c.iter().rposition(|&v| v <= left).map(|i| i + 1)
    }

    /// One iteration. Returns [`Error::BudgetExhausted`] when no level is
    /// affordable any more.
    pub fn step(&mut self) -> Result<StepRecord> {
        let max_rank = self.affordable().ok_or(Error::BudgetExhausted {
            spent: self.budget,
            limit: self.cfg.b_max,
        })?;
        self.iteration += 1;
        let fit = self.cfg.refit.settings(self.iteration);
        let dim = self.family.dim;
        let (lo, hi) = (vec![0.0; dim], vec![1.0; dim]);
        let top = self.costs.levels();
        let ms = &self.cfg.maximizer;

        let (u, rank) = match self.cfg.acquisition.mf_kind() {
            None => {
                let (x, y) = self.data.level_data(top);
                let g = fit_gp_with(&x, &y, &fit, self.sf_params.as_ref(), &mut self.stream)?;
                self.sf_params = Some(g.params().clone());
                let inc = Incumbent {
                    x: self.incumbent.x.clone(),
                    value: self.incumbent.y,
                };
                let (u, _) = match self.cfg.acquisition {
                    AcquisitionKind::Ei => maximize_acquisition(
                        &|x: &[f64]| expected_improvement(&g, &inc, x),
                        &lo,
                        &hi,
                        ms,
                        &mut self.stream,
                    ),
                    AcquisitionKind::Pi => maximize_acquisition(
                        &|x: &[f64]| probability_of_improvement(&g, &inc, x),
                        &lo,
                        &hi,
                        ms,
                        &mut self.stream,
                    ),
                    _ => {
                        let minvals = sample_min_values(&g, &self.cfg.mes, &mut self.stream);
                        maximize_acquisition(
                            &|x: &[f64]| max_value_entropy_search(&g, &minvals, x),
                            &lo,
                            &hi,
                            ms,
                            &mut self.stream,
                        )
                    }
                };
                (u, top)
            }
            Some(kind) => {
                let g = fit_mf_gp_with(
                    &self.data,
                    top,
                    &fit,
                    self.mf_params.as_ref(),
                    &mut self.stream,
                )?;
                self.mf_params = Some(g.params().clone());
                let minvals = if kind == MfKind::Mes {
                    sample_min_values_mf(&g, &self.cfg.mes, &mut self.stream)
                } else {
                    Vec::new()
                };
                let acq = MfAcquisition {
                    kind,
                    posterior: &g,
                    costs: &self.costs,
                    incumbent: self.incumbent.y,
                    minvals: &minvals,
                };
                let masked = Affordable {
                    inner: &acq,
                    max_level: max_rank,
                };
                let rec = maximize_mf_acquisition(&masked, &lo, &hi, ms, &mut self.stream);
                (rec.x, rec.level)
            }
        };

        let rank = rank.min(max_rank);
        let u: Vec<f64> = u.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let level = self.cfg.levels[rank - 1];
        let x = self.family.from_unit(&u);
        let y = self.family.evaluate(level, &x, &mut self.eval_stream)?;
        self.budget += self.costs.as_slice()[rank - 1];
        let obs = Observation {
            x: u,
            level: rank,
            y,
        };
        if rank == top && y < self.incumbent.y {
            self.incumbent = obs.clone();
        }
        self.data.push(obs);
        self.data.budget = self.budget;

        let incumbent_x = self.family.from_unit(&self.incumbent.x);
        Ok(StepRecord {
            iteration: self.iteration,
            metrics: compute_metrics(&self.family, &incumbent_x, self.budget)?,
            x,
            level,
            y,
            incumbent: self.incumbent.y,
            incumbent_x,
        })
    }
}

/// Run trial `trial` of `cfg` to budget exhaustion. Configuration and
/// initial-design errors are returned; failures inside the loop end the
/// trial with [`TrialStatus::Failed`] and keep the records so far.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialTrace> {
    run_trial_with(cfg, trial, |_| true)
}

/// [`run_trial`] with a callback after every step; returning `false` stops
/// the trial with [`TrialStatus::Stopped`].
pub fn run_trial_with<F>(
    cfg: &ExperimentConfig,
    trial: usize,
    mut keep_going: F,
) -> Result<TrialTrace>
where
    F: FnMut(&StepRecord) -> bool,
{
    let mut engine = Engine::new(cfg, trial)?;
    let initial = engine.initial_state()?;
    let mut records = Vec::new();
    let status = loop {
        match engine.step() {
            Ok(r) => {
                let go = keep_going(&r);
                records.push(r);
                if !go {
                    break TrialStatus::Stopped;
                }
            }
            Err(Error::BudgetExhausted { .. }) => break TrialStatus::BudgetExhausted,
            Err(e) => {
                break TrialStatus::Failed {
                    message: e.to_string(),
                }
            }
        }
    };
    Ok(TrialTrace {
        trial,
        seed: cfg.seed,
        b_max: cfg.b_max,
        initial,
        records,
        status,
    })
}

/// All trials of `cfg`, sequentially.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialTrace>> {
    (0..cfg.trials).map(|t| run_trial(cfg, t)).collect()
}
