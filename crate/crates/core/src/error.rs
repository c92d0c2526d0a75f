use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function it was passed to.
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    /// No expert offered a prediction for the round and the aggregator has
    /// nothing to fall back on.
    #[error("no expert advice available for this round")]
    NoAdvice,

    /// Market has no participant holding positive wealth.
    #[error("no market participant with positive wealth")]
    NoMarket,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("invalid aggregator specifier `{spec}`: {msg}")]
    Specifier { spec: String, msg: String },

    #[error("aggregator `{name}` emitted {value} for season {season} game {game_id}")]
    BadPrediction {
        name: String,
        season: u32,
        game_id: u32,
        value: f64,
    },

    #[error("unknown season {0}")]
    UnknownSeason(u32),

    #[error("unknown aggregator `{0}`")]
    UnknownAggregator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_prob(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<f64> {
    if beta > 0.0 && beta < 1.0 {
        Ok(beta)
    } else {
        Err(Error::Domain {
            what: "beta",
            value: beta,
        })
    }
}
