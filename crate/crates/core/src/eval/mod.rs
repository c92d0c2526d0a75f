//! Online evaluation of aggregators against an expert population.

mod report_io;
mod signtest;

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use rayon::prelude::*;

use crate::aggregate::{average_predict, Aggregator};
use crate::domain::{Dataset, Outcome};
use crate::error::{Error, Result};
use crate::loss::prob_score;

pub use report_io::{
    read_results, read_summary, write_results, write_signtest, write_summary, ResultRow, ResultsTable, SignTestRow,
    SummaryRow,
};
pub use signtest::{binomial_half_upper_tail, sign_test, SignTest};

/// Prediction substituted when an aggregator has nothing to go on.
pub const FALLBACK_PREDICTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorRun {
    pub name: String,
    pub predictions: Vec<f64>,
    pub scores: Vec<f64>,
    /// Games where the fallback prediction was used.
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonSummary {
    pub aggregator: String,
    pub season: u32,
    pub games: usize,
    pub total_score: f64,
    pub zero_one_error: f64,
    pub rank_vs_experts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `(season, game_id)` of every game, chronological.
    pub games: Vec<(u32, u32)>,
    pub outcomes: Vec<Outcome>,
    pub runs: Vec<AggregatorRun>,
    /// Season totals of every expert who played that season, by roster index.
    pub expert_totals: BTreeMap<u32, Vec<(usize, f64)>>,
    pub summaries: Vec<SeasonSummary>,
}

impl EvalReport {
    pub fn run(&self, name: &str) -> Option<&AggregatorRun> {
        self.runs.iter().find(|r| r.name == name)
    }

    pub fn summary(&self, name: &str, season: u32) -> Option<&SeasonSummary> {
        self.summaries
            .iter()
            .find(|s| s.aggregator == name && s.season == season)
    }
}

fn outcomes_of(dataset: &Dataset) -> Result<Vec<Outcome>> {
    dataset
        .games()
        .iter()
        .map(|g| {
            g.outcome.ok_or_else(|| {
                Error::InvalidDataset(format!("game {}/{} has no outcome", g.season, g.game_id))
            })
        })
        .collect()
}

fn run_one(dataset: &Dataset, outcomes: &[Outcome], agg: &mut dyn Aggregator) -> Result<AggregatorRun> {
    let mut predictions = Vec::with_capacity(outcomes.len());
    let mut scores = Vec::with_capacity(outcomes.len());
    let mut fallbacks = 0;
    for ((game, row), &y) in dataset.iter().zip(outcomes) {
        let p = match agg.predict(row) {
            Ok(p) => p,
            Err(Error::NoAdvice | Error::NoMarket) => {
                fallbacks += 1;
                FALLBACK_PREDICTION
            }
            Err(e) => return Err(e),
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadPrediction {
                name: agg.name().to_owned(),
                season: game.season,
                game_id: game.game_id,
                value: p,
            });
        }
        scores.push(prob_score(p, y)?);
        predictions.push(p);
        agg.observe(y);
    }
    Ok(AggregatorRun {
        name: agg.name().to_owned(),
        predictions,
        scores,
        fallbacks,
    })
}

/// Season totals of every expert, over the games each expert predicted.
pub fn expert_season_totals(dataset: &Dataset) -> Result<BTreeMap<u32, Vec<(usize, f64)>>> {
    let outcomes = outcomes_of(dataset)?;
    let mut totals: BTreeMap<u32, BTreeMap<usize, f64>> = BTreeMap::new();
    for ((game, row), &y) in dataset.iter().zip(&outcomes) {
        let season = totals.entry(game.season).or_default();
        for (i, p) in row.iter() {
            *season.entry(i).or_insert(0.0) += prob_score(p, y)?;
        }
    }
    Ok(totals
        .into_iter()
        .map(|(s, m)| (s, m.into_iter().collect()))
        .collect())
}

/// Runs every aggregator through the dataset in chronological order. Each
/// aggregator predicts a game before seeing its outcome.
///
/// Aggregators are independent and run in parallel; the report lists them in
/// the order given.
pub fn run_online(dataset: &Dataset, mut aggregators: Vec<Box<dyn Aggregator>>) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::InvalidDataset("no games".into()));
    }
    if aggregators.is_empty() {
        return Err(Error::InvalidDataset("no aggregators to evaluate".into()));
    }
    let names: BTreeSet<&str> = aggregators.iter().map(|a| a.name()).collect();
    if names.len() != aggregators.len() {
        return Err(Error::InvalidDataset("duplicate aggregator names".into()));
    }
    let outcomes = outcomes_of(dataset)?;
    let runs = aggregators
        .par_iter_mut()
        .map(|agg| run_one(dataset, &outcomes, agg.as_mut()))
        .collect::<Result<Vec<_>>>()?;

    let expert_totals = expert_season_totals(dataset)?;
    let seasons = dataset.seasons();
    let mut summaries = Vec::new();
    for run in &runs {
        for &season in &seasons {
            let idx: Vec<usize> = dataset
                .games()
                .iter()
                .enumerate()
                .filter(|(_, g)| g.season == season)
                .map(|(i, _)| i)
                .collect();
            let total: f64 = idx.iter().map(|&i| run.scores[i]).sum();
            let preds: Vec<f64> = idx.iter().map(|&i| run.predictions[i]).collect();
            let ys: Vec<Outcome> = idx.iter().map(|&i| outcomes[i]).collect();
            let experts: Vec<f64> = expert_totals
                .get(&season)
                .map(|v| v.iter().map(|&(_, t)| t).collect())
                .unwrap_or_default();
            summaries.push(SeasonSummary {
                aggregator: run.name.clone(),
                season,
                games: idx.len(),
                total_score: total,
                zero_one_error: zero_one_error(&preds, &ys)?,
                rank_vs_experts: expert_rank(total, &experts),
            });
        }
    }
    Ok(EvalReport {
        games: dataset.games().iter().map(|g| g.key()).collect(),
        outcomes,
        runs,
        expert_totals,
        summaries,
    })
}

/// Misclassification rate with `p >= 0.5` read as predicting 1.
pub fn zero_one_error(preds: &[f64], outcomes: &[Outcome]) -> Result<f64> {
    if preds.len() != outcomes.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: outcomes.len(),
        });
    }
    if preds.is_empty() {
        return Ok(0.0);
    }
    let wrong = preds
        .iter()
        .zip(outcomes)
        .filter(|(&p, &y)| Outcome::from(p >= 0.5) != y)
        .count();
    Ok(wrong as f64 / preds.len() as f64)
}

/// Competition rank: one plus the number of experts strictly ahead.
pub fn expert_rank(total: f64, expert_totals: &[f64]) -> usize {
    1 + expert_totals.iter().filter(|&&t| t > total).count()
}

/// Keeps the chosen seasons and the experts who predicted at least once in
/// every one of them.
pub fn multi_year_filter(dataset: &Dataset, seasons: &[u32]) -> Result<Dataset> {
    if seasons.is_empty() {
        return Err(Error::InvalidDataset("no seasons selected".into()));
    }
    let available = dataset.seasons();
    for s in seasons {
        if !available.contains(s) {
            return Err(Error::UnknownSeason(*s));
        }
    }
    let chosen: BTreeSet<u32> = seasons.iter().copied().collect();
    let mut played: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); dataset.n_experts()];
    let mut games = Vec::new();
    for (pos, (game, row)) in dataset.iter().enumerate() {
        if chosen.contains(&game.season) {
            games.push(pos);
            for (i, _) in row.iter() {
                played[i].insert(game.season);
            }
        }
    }
    let experts: Vec<usize> = (0..dataset.n_experts())
        .filter(|&i| played[i] == chosen)
        .collect();
    Ok(dataset.restrict(&games, &experts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BelowZeroAverage {
    pub predictions: Vec<f64>,
    /// Seasons in which no expert finished below zero, so every expert was used.
    pub fallback_seasons: Vec<u32>,
}

/// Hindsight diagnostic: per-game mean over the experts whose final season
/// score is negative.
pub fn below_zero_average(dataset: &Dataset) -> Result<BelowZeroAverage> {
    let totals = expert_season_totals(dataset)?;
    let mut losers: BTreeMap<u32, BTreeSet<usize>> = BTreeMap::new();
    let mut fallback_seasons = Vec::new();
    for (&season, experts) in &totals {
        let set: BTreeSet<usize> = experts.iter().filter(|e| e.1 < 0.0).map(|e| e.0).collect();
        if set.is_empty() {
            warn!("season {season}: no expert finished below zero, using all experts");
            fallback_seasons.push(season);
        }
        losers.insert(season, set);
    }
    let mut predictions = Vec::with_capacity(dataset.n_games());
    for (game, row) in dataset.iter() {
        let set = &losers[&game.season];
        let chosen: Vec<f64> = row.iter().filter(|(i, _)| set.contains(i)).map(|(_, p)| p).collect();
        let p = if !chosen.is_empty() {
            chosen.iter().sum::<f64>() / chosen.len() as f64
        } else {
            average_predict(row).unwrap_or(FALLBACK_PREDICTION)
        };
        predictions.push(p);
    }
    Ok(BelowZeroAverage {
        predictions,
        fallback_seasons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::{Average, Constant};
    use crate::domain::{Game, PredictionRow};
    use approx::assert_relative_eq;

    fn dataset(seasons: &[u32], rows: Vec<Vec<(usize, f64)>>, outcomes: &[u8], n: usize) -> Dataset {
        let roster = (0..n).map(|i| format!("x{i}")).collect();
        let games = seasons
            .iter()
            .zip(outcomes)
            .enumerate()
            .map(|(i, (&s, &y))| Game::new(s, i as u32 + 1, Some(Outcome::try_from(y).unwrap())))
            .collect();
        let rows = rows.into_iter().map(|r| PredictionRow::new(r).unwrap()).collect();
        Dataset::new(roster, games, rows).unwrap()
    }

    #[test]
    fn constant_half_scores_zero() {
        let ds = dataset(&[1, 1, 1], vec![vec![(0, 0.9)], vec![(0, 0.1)], vec![]], &[1, 0, 1], 1);
        let report = run_online(&ds, vec![Box::new(Constant::new(0.5).unwrap())]).unwrap();
        assert_eq!(report.summaries[0].total_score, 0.0);
        assert_eq!(report.runs[0].fallbacks, 0);
    }

    #[test]
    fn average_of_one_expert_mirrors_expert() {
        let ds = dataset(&[1, 1, 2], vec![vec![(0, 0.9)], vec![(0, 0.3)], vec![(0, 0.6)]], &[1, 0, 0], 1);
        let report = run_online(&ds, vec![Box::new(Average::new())]).unwrap();
        let expected: Vec<f64> = [(0.9, 1), (0.3, 0), (0.6, 0)]
            .iter()
            .map(|&(p, y)| prob_score(p, Outcome::try_from(y).unwrap()).unwrap())
            .collect();
        assert_eq!(report.runs[0].scores, expected);
        assert_eq!(report.summary("average", 1).unwrap().rank_vs_experts, 1);
        assert_relative_eq!(
            report.summary("average", 1).unwrap().total_score,
            report.expert_totals[&1][0].1
        );
    }

    #[test]
    fn empty_rows_fall_back_to_half() {
        let ds = dataset(&[1, 1], vec![vec![], vec![(0, 1.0)]], &[1, 1], 1);
        let report = run_online(&ds, vec![Box::new(Average::new())]).unwrap();
        assert_eq!(report.runs[0].predictions, vec![0.5, 1.0]);
        assert_eq!(report.runs[0].fallbacks, 1);
    }

    struct Rogue;
    impl Aggregator for Rogue {
        fn name(&self) -> &str {
            "rogue"
        }
        fn predict(&mut self, _row: &PredictionRow) -> Result<f64> {
            Ok(1.5)
        }
        fn observe(&mut self, _outcome: Outcome) {}
    }

    #[test]
    fn out_of_range_prediction_is_fatal() {
        let ds = dataset(&[3], vec![vec![(0, 0.5)]], &[1], 1);
        let err = run_online(&ds, vec![Box::new(Rogue)]).unwrap_err();
        match err {
            Error::BadPrediction { name, season, game_id, .. } => {
                assert_eq!((name.as_str(), season, game_id), ("rogue", 3, 1));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_outcome_is_rejected() {
        let ds = dataset(&[1], vec![vec![(0, 0.5)]], &[1], 1).with_outcome(0, None);
        assert!(run_online(&ds, vec![Box::new(Average::new())]).is_err());
    }

    #[test]
    fn zero_one_examples() {
        use Outcome::{One, Zero};
        assert_eq!(zero_one_error(&[1.0, 0.0, 0.8], &[One, Zero, One]).unwrap(), 0.0);
        assert_eq!(zero_one_error(&[0.5, 0.5], &[Zero, Zero]).unwrap(), 1.0);
        assert!(zero_one_error(&[0.5], &[]).is_err());
        // 20-game hand fixture: predictions 0.05 * k, outcome 1 on odd k.
        let preds: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
        let ys: Vec<Outcome> = (0..20).map(|k| Outcome::from(k % 2 == 1)).collect();
        // k < 10 predicts 0: wrong on odd k (5 games); k >= 10 predicts 1: wrong on even k (5 games).
        assert_relative_eq!(zero_one_error(&preds, &ys).unwrap(), 10.0 / 20.0);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(expert_rank(200.0, &[10.0, 5.0]), 1);
        assert_eq!(expert_rank(10.0, &[10.0, 5.0]), 1);
        assert_eq!(expert_rank(5.0, &[10.0, 5.0, 5.0, 1.0]), 2);
    }

    proptest::proptest! {
        #[test]
        fn rank_is_affine_invariant(
            totals in proptest::collection::vec(-3000i32..3000, 1..50),
            agg in -3000i32..3000,
            scale in 0.01f64..100.0,
            shift in -1000.0f64..1000.0,
        ) {
            let t: Vec<f64> = totals.iter().map(|&v| v as f64).collect();
            let moved: Vec<f64> = t.iter().map(|v| v * scale + shift).collect();
            proptest::prop_assert_eq!(
                expert_rank(agg as f64, &t),
                expert_rank(agg as f64 * scale + shift, &moved)
            );
        }
    }

    #[test]
    fn multi_year_filter_examples() {
        let ds = dataset(
            &[1, 1, 2, 2],
            vec![
                vec![(0, 0.5), (1, 0.5)],
                vec![(2, 0.4)],
                vec![(0, 0.7)],
                vec![(1, 0.2), (2, 0.9)],
            ],
            &[1, 0, 1, 0],
            4,
        );
        let single = multi_year_filter(&ds, &[1]).unwrap();
        assert_eq!(single.roster(), &["x0", "x1", "x2"]);
        let both = multi_year_filter(&ds, &[1, 2]).unwrap();
        assert_eq!(both.roster(), &["x0", "x1", "x2"]);
        assert_eq!(both.n_games(), 4);
        let ds2 = dataset(&[1, 2], vec![vec![(0, 0.5), (1, 0.4)], vec![(1, 0.3)]], &[1, 0], 2);
        let f = multi_year_filter(&ds2, &[1, 2]).unwrap();
        assert_eq!(f.roster(), &["x1"]);
        assert_eq!(f.rows()[0].iter().collect::<Vec<_>>(), vec![(0, 0.4)]);
        assert!(matches!(multi_year_filter(&ds2, &[3]), Err(Error::UnknownSeason(3))));
    }

    #[test]
    fn below_zero_examples() {
        // Everyone finishes positive: fallback to the plain average.
        let ds = dataset(&[1, 1], vec![vec![(0, 0.9), (1, 0.7)], vec![(0, 0.2), (1, 0.1)]], &[1, 0], 2);
        let b = below_zero_average(&ds).unwrap();
        assert_eq!(b.fallback_seasons, vec![1]);
        assert_relative_eq!(b.predictions[0], 0.8, epsilon = 1e-15);

        // Everyone negative: identical to the plain average.
        let ds = dataset(&[1, 1], vec![vec![(0, 0.0), (1, 0.1)], vec![(0, 1.0), (1, 0.9)]], &[1, 0], 2);
        let b = below_zero_average(&ds).unwrap();
        assert!(b.fallback_seasons.is_empty());
        assert_relative_eq!(b.predictions[0], 0.05, epsilon = 1e-15);
        assert_relative_eq!(b.predictions[1], 0.95, epsilon = 1e-15);

        // Mixed: x0 and x2 finish at -300, x1 at +160; x2 absent from game 2.
        let ds = dataset(
            &[1, 1],
            vec![vec![(0, 0.0), (1, 0.9), (2, 0.0)], vec![(0, 0.5), (1, 0.3)]],
            &[1, 0],
            3,
        );
        let b = below_zero_average(&ds).unwrap();
        assert_relative_eq!(b.predictions[0], 0.0);
        assert_relative_eq!(b.predictions[1], 0.5);
    }
}
