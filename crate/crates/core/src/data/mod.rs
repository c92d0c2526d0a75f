//! Synthetic data under the Gaussian-expert model, and CSV persistence.

mod csv_io;
mod generate;

pub use csv_io::{
    load_dataset, load_dir, load_sigmas, save_dataset, save_sigmas, format_prob, OUTCOMES_FILE,
    PREDICTIONS_FILE, SIGMAS_FILE, TRUTHS_FILE,
};
pub use generate::{generate, expert_id, GeneratorConfig, Generated, TrueProbLaw};
