//! Multi-fidelity Bayesian optimization.
//!
//! Gaussian-process surrogates (single and autoregressive multi-fidelity),
//! single- and multi-fidelity acquisition functions, a benchmark suite of
//! fidelity families, a budgeted optimization engine and metric reporting.

pub mod acquisition;
pub mod acquisition_mf;
pub mod benchmarks;
pub mod cli;
pub mod data;
pub mod engine;
pub mod error;
pub mod gp;
mod hyper;
pub mod math;
pub mod metrics;
pub mod mfgp;
mod optim;

pub use acquisition::{
    expected_improvement, max_value_entropy_search, maximize_acquisition,
    probability_of_improvement, sample_min_values, Incumbent, MaximizerSettings, MesSettings,
};
pub use acquisition_mf::{
    maximize_mf_acquisition, mfei, mfmes, mfpi, sample_min_values_mf, CostSchedule, MfAcquisition,
    MfEvaluator, MfKind, MfRecommendation,
};
pub use benchmarks::{
    lookup, registry, spring_mass_simulate, FidelityFamily, OptimumRecord, SpringMassConfig,
};
pub use data::{Observation, ObservationSet};
pub use engine::{
    initial_design, run_trial, run_trial_with, run_trials, AcquisitionKind, Engine,
    ExperimentConfig, InitialState, RefitSchedule, StepRecord, TrialStatus, TrialTrace,
};
pub use error::{Error, Result};
pub use gp::{
    fit_gp, fit_gp_with, kernel_eval, log_marginal_likelihood, GpPosterior, KernelParams,
    TargetScaling,
};
pub use hyper::FitSettings;
pub use math::RandomStream;
pub use metrics::{
    aggregate, budget_to_reach, compute_metrics, emit, parse_aggregate_csv, AggregateCurve,
    EmittedFiles, MetricPoint,
};
pub use mfgp::{
    fit_mf_gp, fit_mf_gp_with, mf_kernel_eval, LevelMoments, LevelSlice, MfGpPosterior,
    MfKernelParams,
};
