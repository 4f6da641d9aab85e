//! Aggregate report rows (CSV) and per-repetition records (JSON).

use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;

use cfextract_core::attack::{ExtractionOutcome, Scenario, ScenarioReport};
use cfextract_core::metrics::percent;
use serde::Serialize;

use crate::config::{ArchMode, Cell};
use crate::error::{CliError, Result};

/// One aggregated grid cell. Rates are fractions; they are written as
/// percentages with two decimals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario: Scenario,
    pub dataset: String,
    pub arch_knowledge: ArchMode,
    pub mad_flag: bool,
    pub query_budget: usize,
    pub k: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mean_fidelity: f64,
    pub mean_accuracy: f64,
    pub std_fidelity: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub repetition_seeds: Vec<u64>,
}

impl ReportRow {
    pub fn new(scenario: Scenario, dataset: &str, cell: &Cell, seed: u64, report: &ScenarioReport) -> Self {
        ReportRow {
            scenario,
            dataset: dataset.to_string(),
            arch_knowledge: cell.arch,
            mad_flag: cell.mad,
            query_budget: cell.query_budget,
            k: cell.k,
            lambda1: cell.lambda1,
            lambda2: cell.lambda2,
            mean_fidelity: report.mean_fidelity,
            mean_accuracy: report.mean_accuracy,
            std_fidelity: report.std_fidelity,
            repetitions: report.outcomes.len(),
            seed,
            repetition_seeds: report.outcomes.iter().map(|o| o.seed).collect(),
        }
    }

    /// Sort key: scenario, dataset, arch knowledge (known first), MAD flag
    /// (off first), budget, k, lambda1, lambda2.
    pub fn sort_key_cmp(&self, other: &Self) -> Ordering {
        (self.scenario, &self.dataset, self.arch_knowledge, self.mad_flag, self.query_budget, self.k)
            .cmp(&(other.scenario, &other.dataset, other.arch_knowledge, other.mad_flag, other.query_budget, other.k))
            .then(self.lambda1.total_cmp(&other.lambda1))
            .then(self.lambda2.total_cmp(&other.lambda2))
    }
}

pub const REPORT_HEADER: [&str; 14] = [
    "scenario",
    "dataset",
    "arch_knowledge",
    "mad_flag",
    "query_budget",
    "k",
    "lambda1",
    "lambda2",
    "mean_fidelity",
    "mean_accuracy",
    "std_fidelity",
    "repetitions",
    "seed",
    "repetition_seeds",
];

fn join_seeds(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

/// Writes rows sorted by [`ReportRow::sort_key_cmp`].
pub fn write_report_csv<W: Write>(writer: W, rows: &[ReportRow]) -> Result<()> {
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sort_key_cmp(b));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_HEADER)?;
    for r in sorted {
        w.write_record([
            r.scenario.to_string(),
            r.dataset.clone(),
            r.arch_knowledge.as_str().to_string(),
            r.mad_flag.to_string(),
            r.query_budget.to_string(),
            r.k.to_string(),
            r.lambda1.to_string(),
            r.lambda2.to_string(),
            percent(r.mean_fidelity),
            percent(r.mean_accuracy),
            percent(r.std_fidelity),
            r.repetitions.to_string(),
            r.seed.to_string(),
            join_seeds(&r.repetition_seeds),
        ])?;
    }
    w.flush().map_err(|e| CliError::io("<report>", e))?;
    Ok(())
}

/// Raw outcomes of one cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellRecord<'a> {
    pub scenario: Scenario,
    pub dataset: &'a str,
    pub arch_knowledge: ArchMode,
    pub mad_flag: bool,
    pub query_budget: usize,
    pub k: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub seed: u64,
    pub outcomes: &'a [ExtractionOutcome],
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_csv_file(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_report_csv(std::io::BufWriter::new(file), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(arch: ArchMode, budget: usize, fid: f64) -> ReportRow {
        ReportRow {
            scenario: Scenario::S1,
            dataset: "adult".into(),
            arch_knowledge: arch,
            mad_flag: true,
            query_budget: budget,
            k: 1,
            lambda1: 0.5,
            lambda2: 1.0,
            mean_fidelity: fid,
            mean_accuracy: 0.8368,
            std_fidelity: 0.01234,
            repetitions: 2,
            seed: 42,
            repetition_seeds: vec![43, 40],
        }
    }

    #[test]
    fn csv_is_sorted_and_formatted() {
        let rows = vec![
            row(ArchMode::Unknown, 100, 0.9),
            row(ArchMode::Known, 250, 0.94216),
            row(ArchMode::Known, 100, 0.9),
        ];
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER.join(","));
        assert!(lines[1].starts_with("S1,adult,known,true,100,"));
        assert_eq!(lines[2], "S1,adult,known,true,250,1,0.5,1,94.22,83.68,1.23,2,42,43;40");
        assert!(lines[3].starts_with("S1,adult,unknown,"));
    }
}
