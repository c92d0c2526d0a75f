use std::path::Path;

use super::{EvalReport, SignTest};
use crate::data::format_prob;
use crate::error::{Error, Result};
use crate::io_util::write_atomic;

const RESULTS_HEADER: [&str; 5] = ["aggregator", "season", "game_id", "prediction", "prob_score"];
const SUMMARY_HEADER: [&str; 5] = ["aggregator", "season", "total_score", "zero_one_error", "rank_vs_experts"];
const SIGNTEST_HEADER: [&str; 6] = ["aggregator_a", "aggregator_b", "wins", "losses", "ties", "p_value"];

fn render<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_results(report: &EvalReport, path: &Path) -> Result<()> {
    let bytes = render(
        RESULTS_HEADER,
        report.runs.iter().flat_map(|run| {
            report.games.iter().enumerate().map(move |(i, &(season, game_id))| {
                [
                    run.name.clone(),
                    season.to_string(),
                    game_id.to_string(),
                    format_prob(run.predictions[i]),
                    format!("{:.6}", run.scores[i]),
                ]
            })
        }),
    )?;
    Ok(write_atomic(path, &bytes)?)
}

pub fn write_summary(report: &EvalReport, path: &Path) -> Result<()> {
    let bytes = render(
        SUMMARY_HEADER,
        report.summaries.iter().map(|s| {
            [
                s.aggregator.clone(),
                s.season.to_string(),
                format!("{:.6}", s.total_score),
                format!("{:.6}", s.zero_one_error),
                s.rank_vs_experts.to_string(),
            ]
        }),
    )?;
    Ok(write_atomic(path, &bytes)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignTestRow {
    pub aggregator_a: String,
    pub aggregator_b: String,
    pub test: SignTest,
}

pub fn write_signtest(rows: &[SignTestRow], path: &Path) -> Result<()> {
    let bytes = render(
        SIGNTEST_HEADER,
        rows.iter().map(|r| {
            [
                r.aggregator_a.clone(),
                r.aggregator_b.clone(),
                r.test.wins.to_string(),
                r.test.losses.to_string(),
                r.test.ties.to_string(),
                r.test.p_value.to_string(),
            ]
        }),
    )?;
    Ok(write_atomic(path, &bytes)?)
}

/// Per-game scores read back from `results.csv`, keyed by aggregator in
/// file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pub aggregators: Vec<(String, Vec<ResultRow>)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub season: u32,
    pub game_id: u32,
    pub prediction: f64,
    pub prob_score: f64,
}

impl ResultsTable {
    pub fn get(&self, name: &str) -> Option<&[ResultRow]> {
        self.aggregators
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, rows)| rows.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.aggregators.iter().map(|(n, _)| n.as_str())
    }

    /// Score sequences of two aggregators over the games both cover, in
    /// chronological order.
    pub fn paired_scores(&self, a: &str, b: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let ra = self.get(a).ok_or_else(|| Error::UnknownAggregator(a.to_owned()))?;
        let rb = self.get(b).ok_or_else(|| Error::UnknownAggregator(b.to_owned()))?;
        let by_key: std::collections::BTreeMap<(u32, u32), f64> =
            rb.iter().map(|r| ((r.season, r.game_id), r.prob_score)).collect();
        let mut pairs: Vec<((u32, u32), f64, f64)> = ra
            .iter()
            .filter_map(|r| by_key.get(&(r.season, r.game_id)).map(|&sb| ((r.season, r.game_id), r.prob_score, sb)))
            .collect();
        pairs.sort_by_key(|p| p.0);
        Ok(pairs.into_iter().map(|(_, x, y)| (x, y)).unzip())
    }
}

pub fn read_results(path: &Path) -> Result<ResultsTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != RESULTS_HEADER {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            msg: format!("expected header `{}`", RESULTS_HEADER.join(",")),
        });
    }
    let mut table = ResultsTable::default();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |msg: String| Error::Parse {
            path: path.to_owned(),
            line,
            msg,
        };
        if rec.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", rec.len())));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| err(format!("invalid number `{}`", &rec[i])))
        };
        let int = |i: usize| -> Result<u32> {
            rec[i].parse().map_err(|_| err(format!("invalid integer `{}`", &rec[i])))
        };
        let row = ResultRow {
            season: int(1)?,
            game_id: int(2)?,
            prediction: num(3)?,
            prob_score: num(4)?,
        };
        let name = &rec[0];
        match table.aggregators.iter_mut().find(|(n, _)| n == name) {
            Some((_, rows)) => rows.push(row),
            None => table.aggregators.push((name.to_owned(), vec![row])),
        }
    }
    Ok(table)
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub aggregator: String,
    pub season: u32,
    pub total_score: f64,
    pub zero_one_error: f64,
    pub rank_vs_experts: usize,
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != SUMMARY_HEADER {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            msg: format!("expected header `{}`", SUMMARY_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |msg: String| Error::Parse {
            path: path.to_owned(),
            line,
            msg,
        };
        if rec.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", rec.len())));
        }
        let field = |i: usize| &rec[i];
        rows.push(SummaryRow {
            aggregator: field(0).to_owned(),
            season: field(1).parse().map_err(|_| err(format!("invalid season `{}`", field(1))))?,
            total_score: field(2).parse().map_err(|_| err(format!("invalid score `{}`", field(2))))?,
            zero_one_error: field(3).parse().map_err(|_| err(format!("invalid error rate `{}`", field(3))))?,
            rank_vs_experts: field(4).parse().map_err(|_| err(format!("invalid rank `{}`", field(4))))?,
        });
    }
    Ok(rows)
}
