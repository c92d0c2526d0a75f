use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution, Normal};

use crate::domain::{Dataset, Game, Outcome, PredictionRow};
use crate::error::{Error, Result};

/// Distribution of each game's true probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrueProbLaw {
    Uniform,
    Beta { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_experts: usize,
    /// Games per season.
    pub n_games: usize,
    pub n_seasons: usize,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub missing_rate: f64,
    pub true_prob_law: TrueProbLaw,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_experts: 50,
            n_games: 200,
            n_seasons: 1,
            sigma_lo: 0.05,
            sigma_hi: 0.4,
            missing_rate: 0.0,
            true_prob_law: TrueProbLaw::Uniform,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidDataset(format!("generator: {msg}")));
        if self.n_experts == 0 || self.n_games == 0 || self.n_seasons == 0 {
            return bad("experts, games and seasons must be positive");
        }
        if !(self.sigma_lo > 0.0 && self.sigma_lo <= self.sigma_hi && self.sigma_hi.is_finite()) {
            return bad("need 0 < sigma_lo <= sigma_hi");
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return bad("missing rate must lie in [0, 1)");
        }
        if let TrueProbLaw::Beta { a, b } = self.true_prob_law {
            if !(a > 0.0 && b > 0.0) {
                return bad("beta law parameters must be positive");
            }
        }
        Ok(())
    }
}

/// A generated dataset together with the per-expert deviations that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub dataset: Dataset,
    /// Generating deviation of each roster expert.
    pub sigmas: Vec<f64>,
}

/// Zero-padded id so that lexicographic and numeric order agree.
pub fn expert_id(i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len().max(3);
    format!("e{i:0width$}")
}

/// Rounds to the 6-decimal grid used on disk so saved files reload exactly.
fn quantize(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

const GAME_STREAM: u64 = 0;
const SIGMA_STREAM: u64 = 1;
const EXPERT_STREAM_BASE: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Draws a dataset from the Gaussian-expert model.
///
/// All randomness comes from ChaCha20 keyed by `seed`: stream 0 drives the
/// games, stream 1 the expert deviations, and stream `2 + i` the reports of
/// expert `i`, so changing the number of experts leaves games untouched.
pub fn generate(config: &GeneratorConfig) -> Result<Generated> {
    config.validate()?;
    let n = config.n_experts;

    let mut sigma_rng = stream(config.seed, SIGMA_STREAM);
    let sigmas: Vec<f64> = (0..n)
        .map(|_| {
            let s = if config.sigma_lo == config.sigma_hi {
                config.sigma_lo
            } else {
                sigma_rng.random_range(config.sigma_lo..config.sigma_hi)
            };
            quantize(s).max(1e-6)
        })
        .collect();

    let mut game_rng = stream(config.seed, GAME_STREAM);
    let beta_law = match config.true_prob_law {
        TrueProbLaw::Beta { a, b } => Some(Beta::new(a, b).map_err(|e| Error::InvalidDataset(e.to_string()))?),
        TrueProbLaw::Uniform => None,
    };
    let mut expert_rngs: Vec<ChaCha20Rng> =
        (0..n).map(|i| stream(config.seed, EXPERT_STREAM_BASE + i as u64)).collect();
    let noise: Vec<Normal<f64>> = sigmas
        .iter()
        .map(|&s| Normal::new(0.0, s).expect("positive deviation"))
        .collect();

    let total = config.n_games * config.n_seasons;
    let mut games = Vec::with_capacity(total);
    let mut rows = Vec::with_capacity(total);
    for season in 1..=config.n_seasons as u32 {
        for game_id in 1..=config.n_games as u32 {
            let p = quantize(match &beta_law {
                Some(law) => law.sample(&mut game_rng),
                None => game_rng.random::<f64>(),
            });
            let y = Outcome::from(game_rng.random::<f64>() < p);

            let mut present = vec![false; n];
            let mut reports = vec![0.0; n];
            for i in 0..n {
                let rng = &mut expert_rngs[i];
                present[i] = rng.random::<f64>() >= config.missing_rate;
                reports[i] = quantize((p + noise[i].sample(rng)).clamp(0.0, 1.0));
            }
            let mut redraws = 0;
            while !present.iter().any(|&x| x) {
                redraws += 1;
                for i in 0..n {
                    present[i] = expert_rngs[i].random::<f64>() >= config.missing_rate;
                }
            }
            if redraws > 0 {
                warn!("season {season} game {game_id}: every expert masked, re-masked {redraws} time(s)");
            }
            let entries = (0..n).filter(|&i| present[i]).map(|i| (i, reports[i])).collect();
            rows.push(PredictionRow::new(entries)?);
            games.push(Game {
                season,
                game_id,
                outcome: Some(y),
                true_prob: Some(p),
            });
        }
    }
    let roster = (0..n).map(|i| expert_id(i, n)).collect();
    Ok(Generated {
        dataset: Dataset::new(roster, games, rows)?,
        sigmas,
    })
}
