//! Games, per-game expert predictions and the dataset that aligns them.
//!
//! Experts are referred to by their position in the dataset roster; the
//! roster is kept sorted by expert id so index order and id order agree.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_prob, Error, Result};

/// Binary event outcome. `One` is the event happening (home win on real data).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    pub fn value(self) -> f64 {
        match self {
            Outcome::Zero => 0.0,
            Outcome::One => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Zero => Outcome::One,
            Outcome::One => Outcome::Zero,
        }
    }
}

impl TryFrom<u8> for Outcome {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Outcome::Zero),
            1 => Ok(Outcome::One),
            other => Err(Error::Domain {
                what: "outcome",
                value: other as f64,
            }),
        }
    }
}

impl From<bool> for Outcome {
    fn from(b: bool) -> Self {
        if b {
            Outcome::One
        } else {
            Outcome::Zero
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Zero => f.write_str("0"),
            Outcome::One => f.write_str("1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    pub season: u32,
    /// Chronological ordinal within the season.
    pub game_id: u32,
    pub outcome: Option<Outcome>,
    /// Hidden generating probability; only synthetic data carries it.
    pub true_prob: Option<f64>,
}

impl Game {
    pub fn new(season: u32, game_id: u32, outcome: Option<Outcome>) -> Self {
        Self {
            season,
            game_id,
            outcome,
            true_prob: None,
        }
    }

    pub fn key(&self) -> (u32, u32) {
        (self.season, self.game_id)
    }
}

/// The predictions offered for one game, keyed by roster index.
///
/// Entries are sorted by expert index and unique. Experts not listed are
/// missing for the game.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionRow {
    entries: Vec<(usize, f64)>,
}

impl PredictionRow {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self> {
        for &(_, p) in &entries {
            check_prob("prediction", p)?;
        }
        entries.sort_by_key(|&(i, _)| i);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidDataset(
                "duplicate expert in prediction row".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// Row where expert `i` offers `probs[i]`.
    pub fn full(probs: &[f64]) -> Result<Self> {
        Self::new(probs.iter().copied().enumerate().collect())
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn get(&self, expert: usize) -> Option<f64> {
        self.entries
            .binary_search_by_key(&expert, |&(i, _)| i)
            .ok()
            .map(|pos| self.entries[pos].1)
    }

    pub fn contains(&self, expert: usize) -> bool {
        self.get(expert).is_some()
    }

    /// Largest expert index referenced, if any.
    pub fn max_expert(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    /// Dense vector over `n` experts with missing entries set to `fill`.
    pub fn dense(&self, n: usize, fill: f64) -> Vec<f64> {
        let mut out = vec![fill; n];
        for &(i, p) in &self.entries {
            out[i] = p;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    roster: Vec<String>,
    games: Vec<Game>,
    rows: Vec<PredictionRow>,
}

impl Dataset {
    /// Builds a dataset, checking alignment, ordering and id uniqueness.
    ///
    /// The roster must be sorted ascending and the games must be in
    /// chronological `(season, game_id)` order.
    pub fn new(roster: Vec<String>, games: Vec<Game>, rows: Vec<PredictionRow>) -> Result<Self> {
        if games.len() != rows.len() {
            return Err(Error::LengthMismatch {
                left: games.len(),
                right: rows.len(),
            });
        }
        if roster.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDataset(
                "roster must be sorted and unique".into(),
            ));
        }
        if games.windows(2).any(|w| w[0].key() >= w[1].key()) {
            return Err(Error::InvalidDataset(
                "games must be unique and chronologically ordered".into(),
            ));
        }
        for g in &games {
            if let Some(p) = g.true_prob {
                check_prob("true_prob", p)?;
            }
        }
        for row in &rows {
            if let Some(i) = row.max_expert() {
                if i >= roster.len() {
                    return Err(Error::InvalidDataset(format!(
                        "prediction for expert index {i} outside roster of {}",
                        roster.len()
                    )));
                }
            }
        }
        Ok(Self {
            roster,
            games,
            rows,
        })
    }

    pub fn roster(&self) -> &[String] {
        &self.roster
    }

    pub fn games(&self) -> &[Game] {
        &self.games
    }

    pub fn rows(&self) -> &[PredictionRow] {
        &self.rows
    }

    pub fn n_experts(&self) -> usize {
        self.roster.len()
    }

    pub fn n_games(&self) -> usize {
        self.games.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    pub fn expert_index(&self, id: &str) -> Option<usize> {
        self.roster.binary_search_by(|e| e.as_str().cmp(id)).ok()
    }

    /// Distinct seasons in chronological order.
    pub fn seasons(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for g in &self.games {
            if out.last() != Some(&g.season) {
                out.push(g.season);
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Game, &PredictionRow)> {
        self.games.iter().zip(&self.rows)
    }

    /// Copy of the dataset with one game's outcome replaced.
    pub fn with_outcome(&self, game: usize, outcome: Option<Outcome>) -> Self {
        let mut out = self.clone();
        out.games[game].outcome = outcome;
        out
    }

    /// Restricts to the given games (by position) and experts (by index),
    /// re-indexing rows against the reduced roster.
    pub(crate) fn restrict(&self, games: &[usize], experts: &[usize]) -> Self {
        let keep: HashSet<usize> = experts.iter().copied().collect();
        let mut remap = vec![usize::MAX; self.roster.len()];
        let mut roster = Vec::with_capacity(experts.len());
        for (new, &old) in experts.iter().enumerate() {
            remap[old] = new;
            roster.push(self.roster[old].clone());
        }
        let mut out_games = Vec::with_capacity(games.len());
        let mut out_rows = Vec::with_capacity(games.len());
        for &g in games {
            out_games.push(self.games[g].clone());
            let entries = self.rows[g]
                .iter()
                .filter(|(i, _)| keep.contains(i))
                .map(|(i, p)| (remap[i], p))
                .collect();
            out_rows.push(PredictionRow { entries });
        }
        Self {
            roster,
            games: out_games,
            rows: out_rows,
        }
    }
}
