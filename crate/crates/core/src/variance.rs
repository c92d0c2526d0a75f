//! Inverse-variance pooling with per-expert noise levels fitted by
//! alternating maximum likelihood.
//!
//! Each expert is modelled as reporting the event's true probability plus
//! zero-mean Gaussian noise with an expert-specific standard deviation. Given
//! the deviations the likelihood-maximising consensus is the inverse-variance
//! weighted mean; given the consensus the maximising deviation is the RMS
//! distance of the expert's reports from it. [`VarianceState::fit`] alternates
//! the two over the whole history until the deviations settle. Outcomes are
//! never used.

use log::debug;

use crate::aggregate::Aggregator;
use crate::domain::{Outcome, PredictionRow};
use crate::error::{Error, Result};

const PRIOR_EVENTS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceConfig {
    /// Lower bound on every fitted deviation.
    pub sigma_floor: f64,
    /// Deviation assumed for experts without history.
    pub initial_sigma: f64,
    /// Stop refitting once no deviation moves by more than this.
    pub em_tol: f64,
    pub max_sweeps: usize,
    /// Weight, in events, of `initial_sigma` as a prior observation in every
    /// expert's deviation estimate. Zero gives the plain RMS estimate.
    pub prior_events: f64,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        Self {
            sigma_floor: 1e-3,
            initial_sigma: 0.25,
            em_tol: 1e-6,
            max_sweeps: 50,
            prior_events: PRIOR_EVENTS,
        }
    }
}

/// Inverse-variance weighted mean of the present experts, clamped to `[0, 1]`.
pub fn ml_probability(row: &PredictionRow, sigma: &[f64]) -> Result<f64> {
    ml_probability_filtered(row, sigma, |_| true)
}

fn ml_probability_filtered(
    row: &PredictionRow,
    sigma: &[f64],
    keep: impl Fn(usize) -> bool,
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, p) in row.iter().filter(|&(i, _)| keep(i)) {
        let w = 1.0 / (sigma[i] * sigma[i]);
        num += w * p;
        den += w;
    }
    if den > 0.0 {
        Ok((num / den).clamp(0.0, 1.0))
    } else {
        Err(Error::NoAdvice)
    }
}

/// RMS deviation of an expert's reports from the consensus over the events it
/// took part in, floored at `sigma_floor`. The prior deviation `initial_sigma`
/// enters the mean square as `prior_events` extra events, and is returned
/// as is for an expert without history.
pub fn estimate_sigma(pairs: impl IntoIterator<Item = (f64, f64)>, config: &VarianceConfig) -> f64 {
    let (sum_sq, n) = pairs
        .into_iter()
        .fold((0.0, 0u32), |(s, n), (consensus, p)| (s + (consensus - p).powi(2), n + 1));
    finish_sigma(sum_sq, n, config).0
}

fn finish_sigma(sum_sq: f64, n: u32, config: &VarianceConfig) -> (f64, bool) {
    if n == 0 {
        return (config.initial_sigma, false);
    }
    let n0 = config.prior_events;
    let raw = ((sum_sq + n0 * config.initial_sigma.powi(2)) / (n as f64 + n0)).sqrt();
    if raw < config.sigma_floor {
        (config.sigma_floor, true)
    } else {
        (raw, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepReport {
    /// Largest absolute change of any expert's deviation.
    pub max_delta: f64,
    /// Whether the floor or the `[0, 1]` consensus clamp was applied.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub sweeps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct VarianceState {
    config: VarianceConfig,
    sigma: Vec<f64>,
    consensus: Vec<f64>,
    participation: Vec<u32>,
    events: Vec<PredictionRow>,
}

impl VarianceState {
    pub fn new(n_experts: usize, config: VarianceConfig) -> Self {
        Self {
            config,
            sigma: vec![config.initial_sigma; n_experts],
            consensus: Vec::new(),
            participation: vec![0; n_experts],
            events: Vec::new(),
        }
    }

    pub fn config(&self) -> &VarianceConfig {
        &self.config
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn consensus(&self) -> &[f64] {
        &self.consensus
    }

    pub fn participation(&self) -> &[u32] {
        &self.participation
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    /// Appends an event's predictions to the history without refitting.
    pub fn push_event(&mut self, row: PredictionRow) {
        for (i, _) in row.iter() {
            self.participation[i] += 1;
        }
        let c = ml_probability(&row, &self.sigma).unwrap_or(0.5);
        self.consensus.push(c);
        self.events.push(row);
    }

    /// One alternation: consensus for every event from the current
    /// deviations, then every deviation from the new consensus.
    pub fn em_sweep(&mut self) -> SweepReport {
        let mut clamped = false;
        for (row, c) in self.events.iter().zip(self.consensus.iter_mut()) {
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, p) in row.iter() {
                let w = 1.0 / (self.sigma[i] * self.sigma[i]);
                num += w * p;
                den += w;
            }
            if den > 0.0 {
                let raw = num / den;
                let v = raw.clamp(0.0, 1.0);
                clamped |= v != raw;
                *c = v;
            }
        }

        let mut sum_sq = vec![0.0; self.sigma.len()];
        for (row, &c) in self.events.iter().zip(&self.consensus) {
            for (i, p) in row.iter() {
                sum_sq[i] += (c - p) * (c - p);
            }
        }
        let mut max_delta: f64 = 0.0;
        for (i, s) in self.sigma.iter_mut().enumerate() {
            let (next, floored) = finish_sigma(sum_sq[i], self.participation[i], &self.config);
            clamped |= floored;
            max_delta = max_delta.max((next - *s).abs());
            *s = next;
        }
        SweepReport { max_delta, clamped }
    }

    /// Sweeps from the current deviations until they settle or the sweep
    /// budget runs out.
    pub fn fit(&mut self) -> FitReport {
        for sweep in 1..=self.config.max_sweeps {
            let report = self.em_sweep();
            if report.max_delta < self.config.em_tol {
                return FitReport {
                    sweeps: sweep,
                    converged: true,
                };
            }
        }
        debug!(
            "variance fit did not settle within {} sweeps at event {}",
            self.config.max_sweeps,
            self.events.len()
        );
        FitReport {
            sweeps: self.config.max_sweeps,
            converged: false,
        }
    }

    /// Gaussian log-likelihood of the history under the current consensus and
    /// deviations, up to an additive constant, plus the log prior on the
    /// deviations of experts with history.
    pub fn log_likelihood(&self) -> f64 {
        let n0 = self.config.prior_events;
        let s0 = self.config.initial_sigma;
        let mut ll = 0.0;
        for (&s, &n) in self.sigma.iter().zip(&self.participation) {
            if n > 0 {
                ll -= n0 * (s0 * s0 / (2.0 * s * s) + s.ln());
            }
        }
        for (row, &c) in self.events.iter().zip(&self.consensus) {
            for (i, p) in row.iter() {
                let s = self.sigma[i];
                ll -= (c - p) * (c - p) / (2.0 * s * s) + s.ln();
            }
        }
        ll
    }

    /// Indices of the `k` experts with the smallest deviation, ties broken by
    /// ascending index.
    pub fn least_sigma(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.sigma.len()).collect();
        idx.sort_by(|&a, &b| self.sigma[a].total_cmp(&self.sigma[b]).then(a.cmp(&b)));
        idx.truncate(k);
        idx
    }
}

pub fn variance_predict(state: &VarianceState, row: &PredictionRow) -> Result<f64> {
    ml_probability(row, &state.sigma)
}

/// Inverse-variance pooling restricted to the present experts among the `k`
/// with the smallest deviation. Falls back to all present experts when none of
/// the `k` are present.
pub fn variance_top_k_predict(state: &VarianceState, row: &PredictionRow, k: usize) -> Result<f64> {
    if row.is_empty() {
        return Err(Error::NoAdvice);
    }
    if k >= state.sigma.len() {
        return variance_predict(state, row);
    }
    let mut chosen = vec![false; state.sigma.len()];
    for i in state.least_sigma(k) {
        chosen[i] = true;
    }
    match ml_probability_filtered(row, &state.sigma, |i| chosen[i]) {
        Err(Error::NoAdvice) => variance_predict(state, row),
        other => other,
    }
}

#[derive(Debug, Clone)]
pub struct VarianceAggregator {
    name: String,
    top_k: Option<usize>,
    state: VarianceState,
    pending: Option<PredictionRow>,
}

impl VarianceAggregator {
    pub fn new(n_experts: usize, config: VarianceConfig) -> Self {
        Self {
            name: "variance".into(),
            top_k: None,
            state: VarianceState::new(n_experts, config),
            pending: None,
        }
    }

    pub fn top_k(n_experts: usize, k: usize, config: VarianceConfig) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain {
                what: "k",
                value: 0.0,
            });
        }
        Ok(Self {
            name: format!("variance-top:{k}"),
            top_k: Some(k),
            ..Self::new(n_experts, config)
        })
    }

    pub fn state(&self) -> &VarianceState {
        &self.state
    }
}

impl Aggregator for VarianceAggregator {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&mut self, row: &PredictionRow) -> Result<f64> {
        self.pending = Some(row.clone());
        match self.top_k {
            None => variance_predict(&self.state, row),
            Some(k) => variance_top_k_predict(&self.state, row, k),
        }
    }

    fn observe(&mut self, _outcome: Outcome) {
        if let Some(row) = self.pending.take() {
            if row.is_empty() {
                return;
            }
            self.state.push_event(row);
            self.state.fit();
        }
    }
}
