use serde::{Deserialize, Serialize};

/// One evaluated query: input point (normalized to the unit cube), fidelity
/// level (1-based) and observed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub level: usize,
    pub y: f64,
}

/// The running dataset of a Bayesian optimization run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    observations: Vec<Observation>,
    /// Cost spent on adaptive queries so far.
    pub budget: f64,
}

impl ObservationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_observations(observations: Vec<Observation>) -> Self {
        ObservationSet {
            observations,
            budget: 0.0,
        }
    }

    pub fn push(&mut self, obs: Observation) {
        self.observations.push(obs);
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.observations.iter()
    }

    pub fn as_slice(&self) -> &[Observation] {
        &self.observations
    }

    pub fn at_level(&self, level: usize) -> impl Iterator<Item = &Observation> {
        self.observations.iter().filter(move |o| o.level == level)
    }

    pub fn count_at_level(&self, level: usize) -> usize {
        self.at_level(level).count()
    }

    /// Inputs and targets of one level, in insertion order.
    pub fn level_data(&self, level: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.at_level(level).map(|o| (o.x.clone(), o.y)).unzip()
    }

    /// Lowest observed value at `level`, with its location. Ties keep the earliest.
    pub fn best_at_level(&self, level: usize) -> Option<&Observation> {
        self.at_level(level)
            .fold(None, |best: Option<&Observation>, o| match best {
                Some(b) if b.y <= o.y => Some(b),
                _ => Some(o),
            })
    }
}
