//! The `expertpool` command line: `gen`, `run`, `compare` and `report`.
//!
//! Every flag may also be given in a TOML file passed with `--config`, using
//! the flag name as key; flags on the command line win. Exit status is 0 on
//! success, 2 for usage errors and 1 for failures while running.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{self, GeneratorConfig, TrueProbLaw};
use crate::error::Error;
use crate::eval::{self, SignTestRow};
use crate::io_util::write_atomic;
use crate::registry;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SIGNTEST_FILE: &str = "signtest.csv";

#[derive(Debug, Parser)]
#[command(name = "expertpool", version, about = "Aggregate expert probability forecasts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic Gaussian-expert dataset.
    Gen(GenArgs),
    /// Evaluate aggregators online over a dataset.
    Run(RunArgs),
    /// Sign-test pairs of aggregators on per-game scores.
    Compare(CompareArgs),
    /// Print season totals from a summary file as a table.
    Report(ReportArgs),
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GenArgs {
    /// Number of experts.
    #[arg(long)]
    pub experts: Option<usize>,
    /// Games per season.
    #[arg(long)]
    pub games: Option<usize>,
    #[arg(long)]
    pub seasons: Option<usize>,
    #[arg(long)]
    pub sigma_lo: Option<f64>,
    #[arg(long)]
    pub sigma_hi: Option<f64>,
    /// Probability that an expert skips a game.
    #[arg(long)]
    pub missing: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Law of the true probabilities: `uniform` or `beta:<a>:<b>`.
    #[arg(long)]
    pub law: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// Directory holding predictions.csv and outcomes.csv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated aggregator specifiers.
    #[arg(long)]
    pub algos: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recorded in the manifest; every aggregator is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CompareArgs {
    /// A results.csv written by `run`.
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Comma-separated `a:b` pairs; the test asks whether `a` beats `b`.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Output file, by default signtest.csv next to the results.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ReportArgs {
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Also print zero-one error rates.
    #[arg(long)]
    #[serde(default)]
    pub errors: bool,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Specifier { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (program name first), executes the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(args) => cmd_gen(with_config(args, |a| a.config.clone(), merge_gen)?),
        Command::Run(args) => cmd_run(with_config(args, |a| a.config.clone(), merge_run)?),
        Command::Compare(args) => cmd_compare(with_config(args, |a| a.config.clone(), merge_compare)?),
        Command::Report(args) => cmd_report(with_config(args, |a| a.config.clone(), merge_report)?),
    }
}

fn with_config<A: DeserializeOwned>(
    args: A,
    path: impl Fn(&A) -> Option<PathBuf>,
    merge: impl Fn(A, A) -> A,
) -> CliResult<A> {
    let Some(path) = path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let file: A = toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
    Ok(merge(args, file))
}

fn merge_gen(a: GenArgs, f: GenArgs) -> GenArgs {
    GenArgs {
        experts: a.experts.or(f.experts),
        games: a.games.or(f.games),
        seasons: a.seasons.or(f.seasons),
        sigma_lo: a.sigma_lo.or(f.sigma_lo),
        sigma_hi: a.sigma_hi.or(f.sigma_hi),
        missing: a.missing.or(f.missing),
        seed: a.seed.or(f.seed),
        law: a.law.or(f.law),
        out: a.out.or(f.out),
        config: a.config,
    }
}

fn merge_run(a: RunArgs, f: RunArgs) -> RunArgs {
    RunArgs {
        data: a.data.or(f.data),
        algos: a.algos.or(f.algos),
        out: a.out.or(f.out),
        seed: a.seed.or(f.seed),
        config: a.config,
    }
}

fn merge_compare(a: CompareArgs, f: CompareArgs) -> CompareArgs {
    CompareArgs {
        results: a.results.or(f.results),
        pairs: a.pairs.or(f.pairs),
        out: a.out.or(f.out),
        config: a.config,
    }
}

fn merge_report(a: ReportArgs, f: ReportArgs) -> ReportArgs {
    ReportArgs {
        summary: a.summary.or(f.summary),
        errors: a.errors || f.errors,
        config: a.config,
    }
}

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| usage(format!("missing required flag --{flag}")))
}

#[derive(Serialize)]
struct Manifest<'a, F: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: Option<u64>,
    flags: &'a F,
    outputs: Vec<String>,
}

fn write_manifest<F: Serialize>(
    dir: &Path,
    command: &str,
    seed: Option<u64>,
    flags: &F,
    outputs: &[&Path],
) -> CliResult<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        flags,
        outputs: outputs.iter().map(|p| file_name(p)).collect(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let path = dir.join(format!("{command}.json"));
    write_atomic(&path, text.as_bytes())?;
    info!("wrote {}", path.display());
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn parse_law(s: &str) -> CliResult<TrueProbLaw> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["uniform"] => Ok(TrueProbLaw::Uniform),
        ["beta", a, b] => {
            let a = a.parse().map_err(|_| usage(format!("invalid law `{s}`")))?;
            let b = b.parse().map_err(|_| usage(format!("invalid law `{s}`")))?;
            Ok(TrueProbLaw::Beta { a, b })
        }
        _ => Err(usage(format!("invalid law `{s}`; expected `uniform` or `beta:<a>:<b>`"))),
    }
}

#[derive(Serialize)]
struct GenFlags<'a> {
    experts: usize,
    games: usize,
    seasons: usize,
    sigma_lo: f64,
    sigma_hi: f64,
    missing: f64,
    law: &'a str,
    out: &'a Path,
}

fn cmd_gen(args: GenArgs) -> CliResult<()> {
    let defaults = GeneratorConfig::default();
    let law_str = args.law.unwrap_or_else(|| "uniform".into());
    let config = GeneratorConfig {
        n_experts: required(args.experts, "experts")?,
        n_games: required(args.games, "games")?,
        n_seasons: args.seasons.unwrap_or(defaults.n_seasons),
        sigma_lo: args.sigma_lo.unwrap_or(defaults.sigma_lo),
        sigma_hi: args.sigma_hi.unwrap_or(defaults.sigma_hi),
        missing_rate: args.missing.unwrap_or(defaults.missing_rate),
        true_prob_law: parse_law(&law_str)?,
        seed: args.seed.unwrap_or(defaults.seed),
    };
    let out = required(args.out, "out")?;
    config.validate().map_err(|e| usage(e.to_string()))?;

    let generated = data::generate(&config)?;
    fs::create_dir_all(&out)?;
    let mut written = data::save_dataset(&generated.dataset, &out)?;
    written.push(data::save_sigmas(generated.dataset.roster(), &generated.sigmas, &out)?);
    for p in &written {
        info!("wrote {}", p.display());
    }
    let flags = GenFlags {
        experts: config.n_experts,
        games: config.n_games,
        seasons: config.n_seasons,
        sigma_lo: config.sigma_lo,
        sigma_hi: config.sigma_hi,
        missing: config.missing_rate,
        law: &law_str,
        out: &out,
    };
    let refs: Vec<&Path> = written.iter().map(PathBuf::as_path).collect();
    write_manifest(&out, "gen", Some(config.seed), &flags, &refs)
}

#[derive(Serialize)]
struct RunFlags<'a> {
    data: &'a Path,
    algos: &'a str,
    out: &'a Path,
}

fn cmd_run(args: RunArgs) -> CliResult<()> {
    let data_dir = required(args.data, "data")?;
    let out = required(args.out, "out")?;
    let algos = args.algos.unwrap_or_else(|| registry::DEFAULT_SPECIFIERS.join(","));
    let seed = args.seed.unwrap_or(0);

    let dataset = data::load_dir(&data_dir)?;
    let aggregators = registry::build_all(&algos, dataset.n_experts())?;
    let report = eval::run_online(&dataset, aggregators)?;
    for run in report.runs.iter().filter(|r| r.fallbacks > 0) {
        info!("{}: fallback prediction on {} games", run.name, run.fallbacks);
    }

    fs::create_dir_all(&out)?;
    let results = out.join(RESULTS_FILE);
    let summary = out.join(SUMMARY_FILE);
    eval::write_results(&report, &results)?;
    eval::write_summary(&report, &summary)?;
    let flags = RunFlags {
        data: &data_dir,
        algos: &algos,
        out: &out,
    };
    write_manifest(&out, "run", Some(seed), &flags, &[&results, &summary])
}

/// Splits `a:b` where both sides may contain colons, choosing the unique split
/// whose halves both name aggregators in `names`.
pub fn split_pair<'a>(pair: &'a str, names: &[&str]) -> CliResult<(&'a str, &'a str)> {
    let colons: Vec<usize> = pair.match_indices(':').map(|(i, _)| i).collect();
    if colons.is_empty() {
        return Err(usage(format!("malformed pair `{pair}`; expected `<a>:<b>`")));
    }
    let splits: Vec<(&str, &str)> = colons
        .iter()
        .map(|&i| (&pair[..i], &pair[i + 1..]))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .collect();
    if splits.is_empty() {
        return Err(usage(format!("malformed pair `{pair}`; expected `<a>:<b>`")));
    }
    let matching: Vec<(&str, &str)> = splits
        .iter()
        .copied()
        .filter(|(a, b)| names.contains(a) && names.contains(b))
        .collect();
    match matching.as_slice() {
        [one] => Ok(*one),
        [] => {
            let missing = splits
                .iter()
                .flat_map(|&(a, b)| [a, b])
                .find(|n| !names.contains(n))
                .unwrap_or(pair);
            Err(CliError::Runtime(Error::UnknownAggregator(missing.to_owned())))
        }
        _ => Err(usage(format!("ambiguous pair `{pair}`"))),
    }
}

#[derive(Serialize)]
struct CompareFlags<'a> {
    results: &'a Path,
    pairs: &'a str,
    out: &'a Path,
}

fn cmd_compare(args: CompareArgs) -> CliResult<()> {
    let results_path = required(args.results, "results")?;
    let pairs = required(args.pairs, "pairs")?;
    let dir = results_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = args.out.unwrap_or_else(|| dir.join(SIGNTEST_FILE));
    if pairs.split(',').any(|p| p.trim().is_empty()) {
        return Err(usage("empty pair in --pairs"));
    }
    if pairs.split(',').any(|p| !p.contains(':')) {
        let bad = pairs.split(',').find(|p| !p.contains(':')).unwrap_or_default();
        return Err(usage(format!("malformed pair `{bad}`; expected `<a>:<b>`")));
    }

    let table = eval::read_results(&results_path)?;
    let names: Vec<&str> = table.names().collect();
    let mut rows = Vec::new();
    for pair in pairs.split(',').map(str::trim) {
        let (a, b) = split_pair(pair, &names)?;
        let (sa, sb) = table.paired_scores(a, b)?;
        let test = eval::sign_test(&sa, &sb)?;
        rows.push(SignTestRow {
            aggregator_a: a.to_owned(),
            aggregator_b: b.to_owned(),
            test,
        });
    }
    let out_dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
    if !out_dir.as_os_str().is_empty() {
        fs::create_dir_all(&out_dir)?;
    }
    eval::write_signtest(&rows, &out)?;
    let flags = CompareFlags {
        results: &results_path,
        pairs: &pairs,
        out: &out,
    };
    write_manifest(&out_dir, "compare", None, &flags, &[&out])
}

/// Renders season totals as a plain-text grid: one row per aggregator in
/// first-appearance order, one column per season.
pub fn render_table(rows: &[eval::SummaryRow], value: impl Fn(&eval::SummaryRow) -> String) -> String {
    let mut aggregators: Vec<&str> = Vec::new();
    let mut seasons: Vec<u32> = Vec::new();
    for r in rows {
        if !aggregators.contains(&r.aggregator.as_str()) {
            aggregators.push(&r.aggregator);
        }
        if !seasons.contains(&r.season) {
            seasons.push(r.season);
        }
    }
    seasons.sort_unstable();

    let header: Vec<String> = std::iter::once("aggregator".to_owned())
        .chain(seasons.iter().map(u32::to_string))
        .collect();
    let mut grid = vec![header];
    for a in &aggregators {
        let mut line = vec![(*a).to_owned()];
        for s in &seasons {
            let cell = rows
                .iter()
                .find(|r| r.aggregator == *a && r.season == *s)
                .map_or_else(|| "-".to_owned(), &value);
            line.push(cell);
        }
        grid.push(line);
    }

    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut text = String::new();
    for line in &grid {
        let mut cells = Vec::with_capacity(line.len());
        for (c, cell) in line.iter().enumerate() {
            if c == 0 {
                cells.push(format!("{cell:<w$}", w = widths[0]));
            } else {
                cells.push(format!("{cell:>w$}", w = widths[c]));
            }
        }
        let _ = writeln!(text, "{}", cells.join("  ").trim_end());
    }
    text
}

fn cmd_report(args: ReportArgs) -> CliResult<()> {
    let path = required(args.summary, "summary")?;
    let rows = eval::read_summary(&path)?;
    print!("{}", render_table(&rows, |r| format!("{:.1}", r.total_score)));
    if args.errors {
        println!();
        println!("zero-one error (a prediction of 0.5 or more counts as predicting 1)");
        print!("{}", render_table(&rows, |r| format!("{:.4}", r.zero_one_error)));
    }
    Ok(())
}
