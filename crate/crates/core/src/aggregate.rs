//! The online aggregator contract and the non-adaptive baselines.

use crate::domain::{Outcome, PredictionRow};
use crate::error::{check_prob, Error, Result};
use crate::loss::prob_score;

/// A stateful online predictor.
///
/// For every game the harness calls [`predict`](Aggregator::predict) once and
/// then [`observe`](Aggregator::observe) with the realised outcome, before
/// moving on to the next game. `observe` is called even when `predict`
/// returned [`Error::NoAdvice`].
pub trait Aggregator: Send {
    fn name(&self) -> &str;

    fn predict(&mut self, row: &PredictionRow) -> Result<f64>;

    fn observe(&mut self, outcome: Outcome);
}

/// Arithmetic mean of the experts present in the row.
pub fn average_predict(row: &PredictionRow) -> Result<f64> {
    if row.is_empty() {
        return Err(Error::NoAdvice);
    }
    let sum: f64 = row.iter().map(|(_, p)| p).sum();
    Ok(sum / row.len() as f64)
}

/// Running contest score of every expert on the roster.
#[derive(Debug, Clone)]
pub struct ScoreLedger {
    scores: Vec<f64>,
    participation: Vec<u32>,
}

impl ScoreLedger {
    pub fn new(n_experts: usize) -> Self {
        Self {
            scores: vec![0.0; n_experts],
            participation: vec![0; n_experts],
        }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn participation(&self) -> &[u32] {
        &self.participation
    }

    /// Credits every expert present in `row` with its score for `outcome`.
    pub fn record(&mut self, row: &PredictionRow, outcome: Outcome) {
        for (i, p) in row.iter() {
            self.scores[i] += prob_score(p, outcome).expect("row probabilities are validated");
            self.participation[i] += 1;
        }
    }

    /// Indices of the `k` best experts, ties broken by ascending index.
    pub fn top_k(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        idx.truncate(k);
        idx
    }

    pub fn all_tied(&self) -> bool {
        self.scores.windows(2).all(|w| w[0] == w[1])
    }
}

/// Mean over present experts who are among the ledger's top `k`.
///
/// When every ledger score is equal (start of a season), or when none of the
/// top `k` is present, every present expert is used.
pub fn average_top_k_predict(row: &PredictionRow, ledger: &ScoreLedger, k: usize) -> Result<f64> {
    if row.is_empty() {
        return Err(Error::NoAdvice);
    }
    if k == 0 {
        return Err(Error::Domain {
            what: "k",
            value: 0.0,
        });
    }
    if ledger.all_tied() || k >= ledger.scores.len() {
        return average_predict(row);
    }
    let mut top = vec![false; ledger.scores.len()];
    for i in ledger.top_k(k) {
        top[i] = true;
    }
    let (sum, n) = row
        .iter()
        .filter(|&(i, _)| top[i])
        .fold((0.0, 0usize), |(s, n), (_, p)| (s + p, n + 1));
    if n == 0 {
        average_predict(row)
    } else {
        Ok(sum / n as f64)
    }
}

#[derive(Debug, Clone)]
pub struct Average {
    name: String,
}

impl Average {
    pub fn new() -> Self {
        Self {
            name: "average".into(),
        }
    }
}

impl Default for Average {
    fn default() -> Self {
        Self::new()
    }
}

impl Aggregator for Average {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&mut self, row: &PredictionRow) -> Result<f64> {
        average_predict(row)
    }

    fn observe(&mut self, _outcome: Outcome) {}
}

/// Average over the `k` experts with the best running score.
#[derive(Debug, Clone)]
pub struct AverageTopK {
    name: String,
    k: usize,
    ledger: ScoreLedger,
    pending: Option<PredictionRow>,
}

impl AverageTopK {
    pub fn new(n_experts: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain {
                what: "k",
                value: 0.0,
            });
        }
        Ok(Self {
            name: format!("average-top:{k}"),
            k,
            ledger: ScoreLedger::new(n_experts),
            pending: None,
        })
    }

    pub fn ledger(&self) -> &ScoreLedger {
        &self.ledger
    }
}

impl Aggregator for AverageTopK {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&mut self, row: &PredictionRow) -> Result<f64> {
        self.pending = Some(row.clone());
        average_top_k_predict(row, &self.ledger, self.k)
    }

    fn observe(&mut self, outcome: Outcome) {
        if let Some(row) = self.pending.take() {
            self.ledger.record(&row, outcome);
        }
    }
}

/// Predicts a fixed probability regardless of advice.
#[derive(Debug, Clone)]
pub struct Constant {
    name: String,
    c: f64,
}

impl Constant {
    pub fn new(c: f64) -> Result<Self> {
        let c = check_prob("constant", c)?;
        Ok(Self {
            name: format!("constant:{c}"),
            c,
        })
    }
}

pub fn constant_predict(c: f64) -> Result<f64> {
    check_prob("constant", c)
}

impl Aggregator for Constant {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&mut self, _row: &PredictionRow) -> Result<f64> {
        Ok(self.c)
    }

    fn observe(&mut self, _outcome: Outcome) {}
}

/// Gives an aggregator a different display name.
pub struct Relabel {
    label: String,
    inner: Box<dyn Aggregator>,
}

impl Relabel {
    pub fn new(label: impl Into<String>, inner: Box<dyn Aggregator>) -> Self {
        Self {
            label: label.into(),
            inner,
        }
    }
}

impl Aggregator for Relabel {
    fn name(&self) -> &str {
        &self.label
    }

    fn predict(&mut self, row: &PredictionRow) -> Result<f64> {
        self.inner.predict(row)
    }

    fn observe(&mut self, outcome: Outcome) {
        self.inner.observe(outcome)
    }
}
