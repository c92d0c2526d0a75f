//! Exponentiated-gradient training of a convex combination of experts under
//! quadratic loss, retrained from scratch before every game.
//!
//! Missing advice is read as 0.5. Each pass visits the history in
//! chronological order; the weights after every pass (and the uniform
//! starting point) are scored on the whole history and the best is kept.

use crate::aggregate::Aggregator;
use crate::domain::{Outcome, PredictionRow};
use crate::error::{Error, Result};
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpGradConfig {
    pub passes: usize,
    pub learning_rate: f64,
}

impl Default for ExpGradConfig {
    fn default() -> Self {
        Self {
            passes: 3,
            learning_rate: 0.1,
        }
    }
}

impl ExpGradConfig {
    pub fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(Error::Domain {
                what: "passes",
                value: 0.0,
            });
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Domain {
                what: "learning rate",
                value: self.learning_rate,
            });
        }
        Ok(())
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// One multiplicative step on a single instance with dense advice `x`.
pub fn eg_update(w: &mut WeightVector, x: &[f64], y: Outcome, learning_rate: f64) {
    let p = dot(w.as_slice(), x);
    let delta = y.value() - p;
    for (wi, &xi) in w.as_mut_slice().iter_mut().zip(x) {
        *wi *= (2.0 * xi * delta * learning_rate).exp();
    }
    w.normalize();
}

pub fn eg_predict(w: &WeightVector, row: &PredictionRow) -> f64 {
    let x = row.dense(w.len(), 0.5);
    dot(w.as_slice(), &x).clamp(0.0, 1.0)
}

/// Total quadratic loss of fixed weights over the history.
pub fn training_loss(w: &WeightVector, history: &[(Vec<f64>, Outcome)]) -> f64 {
    history
        .iter()
        .map(|(x, y)| (dot(w.as_slice(), x) - y.value()).powi(2))
        .sum()
}

/// Trains from uniform weights and returns the best snapshot along with its
/// training loss.
pub fn eg_train(
    n_experts: usize,
    history: &[(Vec<f64>, Outcome)],
    config: &ExpGradConfig,
) -> (WeightVector, f64) {
    let mut w = WeightVector::uniform(n_experts);
    let mut best = w.clone();
    let mut best_loss = training_loss(&w, history);
    if history.is_empty() {
        return (best, best_loss);
    }
    for _ in 0..config.passes {
        for (x, y) in history {
            eg_update(&mut w, x, *y, config.learning_rate);
        }
        let loss = training_loss(&w, history);
        if loss < best_loss {
            best_loss = loss;
            best = w.clone();
        }
    }
    (best, best_loss)
}

#[derive(Debug, Clone)]
pub struct ExpGradAggregator {
    name: String,
    config: ExpGradConfig,
    n_experts: usize,
    history: Vec<(Vec<f64>, Outcome)>,
    weights: WeightVector,
    pending: Option<Vec<f64>>,
}

impl ExpGradAggregator {
    pub fn new(n_experts: usize, config: ExpGradConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            name: format!("expgrad:{}:{}", config.passes, config.learning_rate),
            config,
            n_experts,
            history: Vec::new(),
            weights: WeightVector::uniform(n_experts),
            pending: None,
        })
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }
}

impl Aggregator for ExpGradAggregator {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&mut self, row: &PredictionRow) -> Result<f64> {
        self.pending = Some(row.dense(self.n_experts, 0.5));
        Ok(eg_predict(&self.weights, row))
    }

    fn observe(&mut self, outcome: Outcome) {
        if let Some(x) = self.pending.take() {
            self.history.push((x, outcome));
            self.weights = eg_train(self.n_experts, &self.history, &self.config).0;
        }
    }
}
