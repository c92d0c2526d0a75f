//! Multiplicative-weights aggregation over expert advice.
//!
//! The learner keeps a weight per expert, forms the weighted average `r` of
//! the advice, and predicts `F(r)` for a prediction function `F`. After the
//! outcome is revealed each participating expert's weight is multiplied by
//! `U(q)` where `q` is that expert's absolute loss. When `F` stays inside
//! [`prediction_interval`] and `U` satisfies `beta^q <= U(q) <= 1 - (1 - beta) q`,
//! the total absolute loss never exceeds [`loss_bound`].

use std::fmt;
use std::str::FromStr;

use crate::aggregate::Aggregator;
use crate::domain::{Outcome, PredictionRow};
use crate::error::{check_beta, check_prob, Error, Result};
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionFn {
    Vovk,
    Piecewise,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateFn {
    /// `beta^q`
    Power,
    /// `exp(-beta q)`
    ExpNeg,
    /// `1 - (1 - beta) q`
    Linear,
}

/// How experts without advice for a round are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPolicy {
    /// Missing advice counts as a 0.5 prediction and is scored as such.
    FillHalf,
    /// Absent experts are left out of `r`, and their weight share is held
    /// fixed across the round.
    RelativeWeight,
}

impl FromStr for PredictionFn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "vovk" => Ok(Self::Vovk),
            "piecewise" => Ok(Self::Piecewise),
            "identity" => Ok(Self::Identity),
            _ => Err(format!("unknown prediction function `{s}`")),
        }
    }
}

impl FromStr for UpdateFn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "power" => Ok(Self::Power),
            "expneg" | "exp_neg" => Ok(Self::ExpNeg),
            "linear" => Ok(Self::Linear),
            _ => Err(format!("unknown update function `{s}`")),
        }
    }
}

impl FromStr for MissingPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "half" | "fill_half" => Ok(Self::FillHalf),
            "relative" | "relative_weight" => Ok(Self::RelativeWeight),
            _ => Err(format!("unknown missing-data policy `{s}`")),
        }
    }
}

impl fmt::Display for PredictionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Vovk => "vovk",
            Self::Piecewise => "piecewise",
            Self::Identity => "identity",
        })
    }
}

impl fmt::Display for UpdateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Power => "power",
            Self::ExpNeg => "expneg",
            Self::Linear => "linear",
        })
    }
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FillHalf => "half",
            Self::RelativeWeight => "relative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertsConfig {
    pub beta: f64,
    pub prediction_fn: PredictionFn,
    pub update_fn: UpdateFn,
    pub missing_policy: MissingPolicy,
}

impl Default for ExpertsConfig {
    fn default() -> Self {
        Self {
            beta: 0.75,
            prediction_fn: PredictionFn::Vovk,
            update_fn: UpdateFn::ExpNeg,
            missing_policy: MissingPolicy::RelativeWeight,
        }
    }
}

impl ExpertsConfig {
    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta).map(|_| ())
    }
}

fn bound_scale(beta: f64) -> f64 {
    2.0 * (2.0 / (1.0 + beta)).ln()
}

/// Admissible `[lo, hi]` range for `F(r)`. `lo` is negative for small `r`
/// and `hi` exceeds one for large `r`; no clamping is applied.
pub fn prediction_interval(r: f64, beta: f64) -> Result<(f64, f64)> {
    let r = check_prob("r", r)?;
    let beta = check_beta(beta)?;
    let scale = bound_scale(beta);
    let lo = 1.0 + ((1.0 - r) * beta + r).ln() / scale;
    let hi = -(1.0 - r + r * beta).ln() / scale;
    Ok((lo, hi))
}

pub fn predict_vovk(r: f64, beta: f64) -> Result<f64> {
    let r = check_prob("r", r)?;
    let beta = check_beta(beta)?;
    // Both logs are <= 0 and never both zero, so the ratio is well defined.
    let a = (1.0 - r + r * beta).ln();
    let b = ((1.0 - r) * beta + r).ln();
    Ok(a / (a + b))
}

/// Half-width of the linear section of [`predict_piecewise`].
pub fn piecewise_halfwidth(beta: f64) -> Result<f64> {
    let beta = check_beta(beta)?;
    Ok((1.0 + beta) * (2.0 / (1.0 + beta)).ln() / (2.0 * (1.0 - beta)))
}

pub fn predict_piecewise(r: f64, beta: f64) -> Result<f64> {
    let r = check_prob("r", r)?;
    let c = piecewise_halfwidth(beta)?;
    Ok(if r <= 0.5 - c {
        0.0
    } else if r >= 0.5 + c {
        1.0
    } else {
        0.5 - (1.0 - 2.0 * r) / (4.0 * c)
    })
}

pub fn predict_identity(r: f64, _beta: f64) -> Result<f64> {
    check_prob("r", r)
}

pub fn apply_prediction_fn(f: PredictionFn, r: f64, beta: f64) -> Result<f64> {
    match f {
        PredictionFn::Vovk => predict_vovk(r, beta),
        PredictionFn::Piecewise => predict_piecewise(r, beta),
        PredictionFn::Identity => predict_identity(r, beta),
    }
}

pub fn update_factor(q: f64, beta: f64, update: UpdateFn) -> Result<f64> {
    let q = check_prob("loss", q)?;
    let beta = check_beta(beta)?;
    Ok(match update {
        UpdateFn::Power => (q * beta.ln()).exp(),
        UpdateFn::ExpNeg => (-beta * q).exp(),
        UpdateFn::Linear => 1.0 - (1.0 - beta) * q,
    })
}

/// Worst-case bound on the learner's cumulative absolute loss given `n`
/// experts of which the best lost `best_loss`.
pub fn loss_bound(n: usize, best_loss: f64, beta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain {
            what: "expert count",
            value: 0.0,
        });
    }
    if best_loss.is_nan() || best_loss < 0.0 {
        return Err(Error::Domain {
            what: "best-expert loss",
            value: best_loss,
        });
    }
    let beta = check_beta(beta)?;
    Ok(((n as f64).ln() + best_loss * (1.0 / beta).ln()) / bound_scale(beta))
}

/// Online multiplicative-weights learner.
#[derive(Debug, Clone)]
pub struct ExpertsAggregator {
    name: String,
    config: ExpertsConfig,
    weights: WeightVector,
    pending: Option<PredictionRow>,
}

impl ExpertsAggregator {
    pub fn new(n_experts: usize, config: ExpertsConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            name: format!(
                "experts:{}:{}:{}:{}",
                config.beta, config.prediction_fn, config.update_fn, config.missing_policy
            ),
            config,
            weights: WeightVector::uniform(n_experts),
            pending: None,
        })
    }

    pub fn config(&self) -> &ExpertsConfig {
        &self.config
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Weighted average of the advice before the prediction function.
    pub fn advice(&self, row: &PredictionRow) -> Result<f64> {
        let w = self.weights.as_slice();
        match self.config.missing_policy {
            MissingPolicy::FillHalf => {
                let mut r = 0.0;
                let mut total = 0.0;
                for (i, &wi) in w.iter().enumerate() {
                    r += wi * row.get(i).unwrap_or(0.5);
                    total += wi;
                }
                Ok((r / total).clamp(0.0, 1.0))
            }
            MissingPolicy::RelativeWeight => {
                if row.is_empty() {
                    return Err(Error::NoAdvice);
                }
                let (num, den) = row
                    .iter()
                    .fold((0.0, 0.0), |(n, d), (i, p)| (n + w[i] * p, d + w[i]));
                if den > 0.0 {
                    Ok((num / den).clamp(0.0, 1.0))
                } else {
                    // Every present expert's weight underflowed.
                    crate::aggregate::average_predict(row)
                }
            }
        }
    }

    fn update(&mut self, row: &PredictionRow, outcome: Outcome) {
        let ExpertsConfig {
            beta, update_fn, ..
        } = self.config;
        let y = outcome.value();
        let factor = |p: f64| update_factor((p - y).abs(), beta, update_fn).expect("validated");
        let w = self.weights.as_mut_slice();
        match self.config.missing_policy {
            MissingPolicy::FillHalf => {
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi *= factor(row.get(i).unwrap_or(0.5));
                }
            }
            MissingPolicy::RelativeWeight => {
                if row.is_empty() {
                    return;
                }
                let before: f64 = row.iter().map(|(i, _)| w[i]).sum();
                let mut after = 0.0;
                for (i, p) in row.iter() {
                    w[i] *= factor(p);
                    after += w[i];
                }
                // Absent experts scale with the present group's mass so their
                // share of the total is unchanged.
                if before > 0.0 && row.len() < w.len() {
                    let mean_factor = after / before;
                    let mut present = row.iter().map(|(i, _)| i).peekable();
                    for (i, wi) in w.iter_mut().enumerate() {
                        if present.peek() == Some(&i) {
                            present.next();
                        } else {
                            *wi *= mean_factor;
                        }
                    }
                }
            }
        }
        self.weights.normalize();
    }
}

impl Aggregator for ExpertsAggregator {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&mut self, row: &PredictionRow) -> Result<f64> {
        self.pending = Some(row.clone());
        let r = self.advice(row)?;
        apply_prediction_fn(self.config.prediction_fn, r, self.config.beta)
    }

    fn observe(&mut self, outcome: Outcome) {
        if let Some(row) = self.pending.take() {
            self.update(&row, outcome);
        }
    }
}
