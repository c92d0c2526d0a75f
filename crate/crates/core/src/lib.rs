//! Online aggregation of many experts' probability forecasts for binary
//! events, scored with the quadratic contest rule `100 - 400 (p - y)^2`.
//!
//! Aggregators implement [`Aggregator`] and are driven game by game by
//! [`eval::run_online`]:
//!
//! - [`aggregate`]: plain averaging, averaging the running top-k experts, and
//!   constant baselines.
//! - [`experts`]: multiplicative weights with pluggable prediction and update
//!   functions and two missing-data policies.
//! - [`variance`]: inverse-variance pooling with per-expert deviations fitted
//!   by alternating maximum likelihood.
//! - [`expgrad`]: exponentiated-gradient training of a convex combination.
//! - [`market`]: a log-utility market whose clearing price is the forecast.
//!
//! [`data`] generates synthetic Gaussian-expert datasets and reads and writes
//! the CSV formats; [`registry`] turns `name:param` strings into aggregators.

pub mod aggregate;
pub mod cli;
pub mod data;
pub mod domain;
pub mod error;
pub mod eval;
pub mod expgrad;
pub mod experts;
mod io_util;
pub mod loss;
pub mod market;
pub mod registry;
pub mod variance;
pub mod weights;

pub use aggregate::Aggregator;
pub use domain::{Dataset, Game, Outcome, PredictionRow};
pub use error::{Error, Result};
