//! Parsing of `name:param:param` aggregator specifiers.

use crate::aggregate::{Aggregator, Average, AverageTopK, Constant, Relabel};
use crate::error::{Error, Result};
use crate::expgrad::{ExpGradAggregator, ExpGradConfig};
use crate::experts::{ExpertsAggregator, ExpertsConfig};
use crate::market::{MarketAggregator, MarketConfig};
use crate::variance::{VarianceAggregator, VarianceConfig};

/// Accepted specifier forms, for usage messages.
pub const SPECIFIER_FORMS: &[&str] = &[
    "average",
    "average-top:<k>",
    "constant:<c>",
    "experts[:<beta>:<vovk|piecewise|identity>:<power|expneg|linear>:<half|relative>]",
    "variance",
    "variance-top:<k>",
    "expgrad[:<passes>:<lr>]",
    "market[:single-update]",
];

/// The eight-way comparison run by default: plain and top-k averaging, plain
/// and top-k variance pooling, the experts algorithm with and without the
/// missing-data variant, exponentiated gradient and the market.
pub const DEFAULT_SPECIFIERS: &[&str] = &[
    "average",
    "average-top:30",
    "variance",
    "variance-top:20",
    "experts:0.75:vovk:expneg:half",
    "experts",
    "expgrad",
    "market",
];

fn bad(spec: &str, msg: impl Into<String>) -> Error {
    Error::Specifier {
        spec: spec.to_owned(),
        msg: msg.into(),
    }
}

fn parse_param<T: std::str::FromStr>(spec: &str, what: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| bad(spec, format!("invalid {what} `{s}`")))
}

fn expect_params(spec: &str, params: &[&str], allowed: &[usize]) -> Result<()> {
    if allowed.contains(&params.len()) {
        Ok(())
    } else {
        Err(bad(spec, format!("expected {allowed:?} parameters, got {}", params.len())))
    }
}

/// Builds the aggregator described by `spec` for a roster of `n_experts`. The
/// aggregator reports `spec` itself as its name.
pub fn build(spec: &str, n_experts: usize) -> Result<Box<dyn Aggregator>> {
    let spec = spec.trim();
    let mut parts = spec.split(':');
    let head = parts.next().unwrap_or_default();
    let params: Vec<&str> = parts.collect();
    let inner: Box<dyn Aggregator> = match head {
        "average" => {
            expect_params(spec, &params, &[0])?;
            Box::new(Average::new())
        }
        "average-top" => {
            expect_params(spec, &params, &[1])?;
            let k = parse_param(spec, "k", params[0])?;
            Box::new(AverageTopK::new(n_experts, k).map_err(|e| bad(spec, e.to_string()))?)
        }
        "constant" => {
            expect_params(spec, &params, &[1])?;
            let c = parse_param(spec, "constant", params[0])?;
            Box::new(Constant::new(c).map_err(|e| bad(spec, e.to_string()))?)
        }
        "experts" => {
            expect_params(spec, &params, &[0, 1, 2, 3, 4])?;
            let mut cfg = ExpertsConfig::default();
            if let Some(s) = params.first() {
                cfg.beta = parse_param(spec, "beta", s)?;
            }
            if let Some(s) = params.get(1) {
                cfg.prediction_fn = s.parse().map_err(|m: String| bad(spec, m))?;
            }
            if let Some(s) = params.get(2) {
                cfg.update_fn = s.parse().map_err(|m: String| bad(spec, m))?;
            }
            if let Some(s) = params.get(3) {
                cfg.missing_policy = s.parse().map_err(|m: String| bad(spec, m))?;
            }
            Box::new(ExpertsAggregator::new(n_experts, cfg).map_err(|e| bad(spec, e.to_string()))?)
        }
        "variance" => {
            expect_params(spec, &params, &[0])?;
            Box::new(VarianceAggregator::new(n_experts, VarianceConfig::default()))
        }
        "variance-top" => {
            expect_params(spec, &params, &[1])?;
            let k = parse_param(spec, "k", params[0])?;
            Box::new(
                VarianceAggregator::top_k(n_experts, k, VarianceConfig::default())
                    .map_err(|e| bad(spec, e.to_string()))?,
            )
        }
        "expgrad" => {
            expect_params(spec, &params, &[0, 1, 2])?;
            let mut cfg = ExpGradConfig::default();
            if let Some(s) = params.first() {
                cfg.passes = parse_param(spec, "passes", s)?;
            }
            if let Some(s) = params.get(1) {
                cfg.learning_rate = parse_param(spec, "learning rate", s)?;
            }
            Box::new(ExpGradAggregator::new(n_experts, cfg).map_err(|e| bad(spec, e.to_string()))?)
        }
        "market" => {
            let single_update = match params.as_slice() {
                [] => false,
                ["single-update"] => true,
                _ => return Err(bad(spec, "expected `market` or `market:single-update`")),
            };
            Box::new(MarketAggregator::new(
                n_experts,
                MarketConfig {
                    single_update,
                    ..MarketConfig::default()
                },
            ))
        }
        _ => {
            return Err(bad(
                spec,
                format!("unknown aggregator; valid forms: {}", SPECIFIER_FORMS.join(", ")),
            ))
        }
    };
    Ok(Box::new(Relabel::new(spec, inner)))
}

/// Parses a comma-separated specifier list, rejecting duplicates.
pub fn build_all(list: &str, n_experts: usize) -> Result<Vec<Box<dyn Aggregator>>> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for spec in list.split(',').map(str::trim) {
        if spec.is_empty() {
            return Err(bad(list, "empty specifier"));
        }
        if !seen.insert(spec.to_owned()) {
            return Err(bad(spec, "listed twice"));
        }
        out.push(build(spec, n_experts)?);
    }
    Ok(out)
}
