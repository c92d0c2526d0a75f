use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use crate::domain::{Dataset, Game, Outcome, PredictionRow};
use crate::error::{Error, Result};
use crate::io_util::write_atomic;

pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const OUTCOMES_FILE: &str = "outcomes.csv";
pub const TRUTHS_FILE: &str = "truths.csv";
pub const SIGMAS_FILE: &str = "sigmas.csv";

const PREDICTIONS_HEADER: [&str; 4] = ["season", "game_id", "expert_id", "prob"];
const OUTCOMES_HEADER: [&str; 3] = ["season", "game_id", "outcome"];
const TRUTHS_HEADER: [&str; 3] = ["season", "game_id", "true_prob"];
const SIGMAS_HEADER: [&str; 2] = ["expert_id", "sigma"];

/// Fixed-point, six decimals, no exponent.
pub fn format_prob(p: f64) -> String {
    format!("{p:.6}")
}

struct Table {
    path: PathBuf,
    reader: csv::Reader<std::fs::File>,
}

impl Table {
    fn open(path: &Path, header: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let found: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if found != header {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: 1,
                msg: format!("expected header `{}`, found `{}`", header.join(","), found.join(",")),
            });
        }
        Ok(Self {
            path: path.to_owned(),
            reader,
        })
    }

    /// Yields `(line, record)` pairs.
    fn for_each(&mut self, mut f: impl FnMut(u64, &csv::StringRecord) -> std::result::Result<(), String>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            let more = self.reader.read_record(&mut record).map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::Parse {
                    path: self.path.clone(),
                    line,
                    msg: e.to_string(),
                }
            })?;
            if !more {
                return Ok(());
            }
            let line = record.position().map_or(0, |p| p.line());
            f(line, &record).map_err(|msg| Error::Parse {
                path: self.path.clone(),
                line,
                msg,
            })?;
        }
    }
}

fn field<'r>(rec: &'r csv::StringRecord, i: usize, name: &str) -> std::result::Result<&'r str, String> {
    rec.get(i).ok_or_else(|| format!("missing column `{name}`"))
}

fn parse_u32(rec: &csv::StringRecord, i: usize, name: &str) -> std::result::Result<u32, String> {
    let s = field(rec, i, name)?;
    s.parse().map_err(|_| format!("invalid {name} `{s}`"))
}

fn parse_prob(rec: &csv::StringRecord, i: usize, name: &str) -> std::result::Result<f64, String> {
    let s = field(rec, i, name)?;
    let p: f64 = s.parse().map_err(|_| format!("invalid {name} `{s}`"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{name} {s} outside [0, 1]"))
    }
}

fn check_width(rec: &csv::StringRecord, n: usize) -> std::result::Result<(), String> {
    if rec.len() == n {
        Ok(())
    } else {
        Err(format!("expected {n} fields, found {}", rec.len()))
    }
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

fn read_outcomes(path: &Path) -> Result<BTreeMap<(u32, u32), Option<Outcome>>> {
    let mut table = Table::open(path, &OUTCOMES_HEADER)?;
    let mut games = BTreeMap::new();
    table.for_each(|_, rec| {
        check_width(rec, 3)?;
        let key = (parse_u32(rec, 0, "season")?, parse_u32(rec, 1, "game_id")?);
        let raw = field(rec, 2, "outcome")?;
        let outcome = match raw {
            "" => None,
            "0" => Some(Outcome::Zero),
            "1" => Some(Outcome::One),
            other => return Err(format!("outcome `{other}` not in {{0, 1}}")),
        };
        if games.insert(key, outcome).is_some() {
            return Err(format!("duplicate game {}/{}", key.0, key.1));
        }
        Ok(())
    })?;
    Ok(games)
}

/// Reads `predictions.csv`/`outcomes.csv` shaped files into a dataset ordered
/// by `(season, game_id)`, with the roster being every expert seen.
pub fn load_dataset(predictions_path: &Path, outcomes_path: &Path) -> Result<Dataset> {
    let outcomes = read_outcomes(outcomes_path)?;

    let mut table = Table::open(predictions_path, &PREDICTIONS_HEADER)?;
    let mut raw: Vec<((u32, u32), String, f64)> = Vec::new();
    let mut seen: BTreeSet<((u32, u32), String)> = BTreeSet::new();
    table.for_each(|_, rec| {
        check_width(rec, 4)?;
        let key = (parse_u32(rec, 0, "season")?, parse_u32(rec, 1, "game_id")?);
        let expert = field(rec, 2, "expert_id")?;
        if !is_token(expert) {
            return Err(format!("invalid expert_id `{expert}`"));
        }
        let p = parse_prob(rec, 3, "prob")?;
        if !outcomes.contains_key(&key) {
            return Err(format!("prediction for unknown game {}/{}", key.0, key.1));
        }
        if !seen.insert((key, expert.to_owned())) {
            return Err(format!("duplicate prediction by {expert} for game {}/{}", key.0, key.1));
        }
        raw.push((key, expert.to_owned(), p));
        Ok(())
    })?;

    let roster: Vec<String> = raw
        .iter()
        .map(|(_, e, _)| e.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, usize> = roster.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let position: HashMap<(u32, u32), usize> = outcomes.keys().enumerate().map(|(i, &k)| (k, i)).collect();

    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); outcomes.len()];
    for (key, expert, p) in &raw {
        entries[position[key]].push((index[expert.as_str()], *p));
    }
    let games = outcomes
        .iter()
        .map(|(&(season, game_id), &outcome)| Game::new(season, game_id, outcome))
        .collect();
    let rows = entries
        .into_iter()
        .map(PredictionRow::new)
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(roster, games, rows)
}

fn read_truths(path: &Path) -> Result<HashMap<(u32, u32), f64>> {
    let mut table = Table::open(path, &TRUTHS_HEADER)?;
    let mut out = HashMap::new();
    table.for_each(|_, rec| {
        check_width(rec, 3)?;
        let key = (parse_u32(rec, 0, "season")?, parse_u32(rec, 1, "game_id")?);
        let p = parse_prob(rec, 2, "true_prob")?;
        if out.insert(key, p).is_some() {
            return Err(format!("duplicate game {}/{}", key.0, key.1));
        }
        Ok(())
    })?;
    Ok(out)
}

/// Loads a dataset directory, attaching `truths.csv` when present.
pub fn load_dir(dir: &Path) -> Result<Dataset> {
    let ds = load_dataset(&dir.join(PREDICTIONS_FILE), &dir.join(OUTCOMES_FILE))?;
    let truths_path = dir.join(TRUTHS_FILE);
    if !truths_path.exists() {
        return Ok(ds);
    }
    let truths = read_truths(&truths_path)?;
    let games = ds
        .games()
        .iter()
        .map(|g| Game {
            true_prob: truths.get(&g.key()).copied(),
            ..g.clone()
        })
        .collect();
    Dataset::new(ds.roster().to_vec(), games, ds.rows().to_vec())
}

pub fn load_sigmas(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut table = Table::open(path, &SIGMAS_HEADER)?;
    let mut out = Vec::new();
    table.for_each(|_, rec| {
        check_width(rec, 2)?;
        let id = field(rec, 0, "expert_id")?.to_owned();
        let s = field(rec, 1, "sigma")?;
        let sigma: f64 = s.parse().map_err(|_| format!("invalid sigma `{s}`"))?;
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(format!("sigma {s} must be positive"));
        }
        out.push((id, sigma));
        Ok(())
    })?;
    Ok(out)
}

fn render<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes `predictions.csv` and `outcomes.csv`, plus `truths.csv` when every
/// game carries a true probability. Returns the paths written.
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let roster = ds.roster();
    let predictions = render(
        PREDICTIONS_HEADER,
        ds.iter().flat_map(|(g, row)| {
            row.iter().map(move |(i, p)| {
                [g.season.to_string(), g.game_id.to_string(), roster[i].clone(), format_prob(p)]
            })
        }),
    )?;
    let outcomes = render(
        OUTCOMES_HEADER,
        ds.games().iter().map(|g| {
            [
                g.season.to_string(),
                g.game_id.to_string(),
                g.outcome.map(|y| y.to_string()).unwrap_or_default(),
            ]
        }),
    )?;
    let mut written = vec![dir.join(PREDICTIONS_FILE), dir.join(OUTCOMES_FILE)];
    write_atomic(&written[0], &predictions)?;
    write_atomic(&written[1], &outcomes)?;

    let has_truths = !ds.is_empty() && ds.games().iter().all(|g| g.true_prob.is_some());
    if has_truths {
        let truths = render(
            TRUTHS_HEADER,
            ds.games().iter().map(|g| {
                [
                    g.season.to_string(),
                    g.game_id.to_string(),
                    format_prob(g.true_prob.expect("checked above")),
                ]
            }),
        )?;
        let path = dir.join(TRUTHS_FILE);
        write_atomic(&path, &truths)?;
        written.push(path);
    }
    Ok(written)
}

pub fn save_sigmas(roster: &[String], sigmas: &[f64], dir: &Path) -> Result<PathBuf> {
    if roster.len() != sigmas.len() {
        return Err(Error::LengthMismatch {
            left: roster.len(),
            right: sigmas.len(),
        });
    }
    let bytes = render(
        SIGMAS_HEADER,
        roster.iter().zip(sigmas).map(|(id, &s)| [id.clone(), format_prob(s)]),
    )?;
    std::fs::create_dir_all(dir)?;
    let path = dir.join(SIGMAS_FILE);
    write_atomic(&path, &bytes)?;
    Ok(path)
}
