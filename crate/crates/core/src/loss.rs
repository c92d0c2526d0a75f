//! Per-event loss functions and the contest's quadratic scoring rule.

use crate::domain::Outcome;
use crate::error::{check_prob, Error, Result};

pub fn quadratic_loss(p: f64, y: Outcome) -> Result<f64> {
    let p = check_prob("probability", p)?;
    Ok((p - y.value()).powi(2))
}

pub fn absolute_loss(p: f64, y: Outcome) -> Result<f64> {
    let p = check_prob("probability", p)?;
    Ok((p - y.value()).abs())
}

/// Log loss in nats. A confident wrong prediction yields `f64::INFINITY`.
pub fn log_loss(p: f64, y: Outcome) -> Result<f64> {
    let p = check_prob("probability", p)?;
    let q = match y {
        Outcome::One => p,
        Outcome::Zero => 1.0 - p,
    };
    if q == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(-q.ln())
    }
}

/// `100 - 400 (p - y)^2`, ranging over `[-300, 100]`.
pub fn prob_score(p: f64, y: Outcome) -> Result<f64> {
    Ok(100.0 - 400.0 * quadratic_loss(p, y)?)
}

pub fn cumulative_score(preds: &[f64], outcomes: &[Outcome]) -> Result<f64> {
    if preds.len() != outcomes.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: outcomes.len(),
        });
    }
    preds
        .iter()
        .zip(outcomes)
        .try_fold(0.0, |acc, (&p, &y)| Ok(acc + prob_score(p, y)?))
}
