//! CSV outputs: per-episode runs and per-cell summaries.
//!
//! Floats are written in shortest round-trip form, records end in `\n`.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{ExperimentSummary, HarnessError, Result};

pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const RUNS_HEADER: [&str; 5] = ["policy", "agents", "seed", "delivered", "rate"];
pub const SUMMARY_HEADER: [&str; 5] = ["policy", "agents", "mean_rate", "std_rate", "n"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy: String,
    pub agents: usize,
    pub seed: u64,
    pub delivered: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub policy: String,
    pub agents: usize,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub n: usize,
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.to_path_buf(), source }
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: path.into(), source })
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err(path))
}

/// Writes `runs.csv` and `summary.csv` into `dir`, creating it if needed.
/// Returns the two paths.
pub fn emit_results(summary: &ExperimentSummary, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.into(), source })?;
    let runs_path = dir.join(RUNS_FILE);
    let summary_path = dir.join(SUMMARY_FILE);
    let runs = summary.cells.iter().flat_map(|c| {
        c.runs.iter().map(|r| RunRecord {
            policy: r.policy.clone(),
            agents: r.agents,
            seed: r.seed,
            delivered: r.delivered,
            rate: r.rate,
        })
    });
    write_csv(&runs_path, &RUNS_HEADER, runs)?;
    let cells = summary.cells.iter().map(|c| SummaryRecord {
        policy: c.policy.name().to_string(),
        agents: c.agents,
        mean_rate: c.mean_rate,
        std_rate: c.std_rate,
        n: c.n,
    });
    write_csv(&summary_path, &SUMMARY_HEADER, cells)?;
    Ok((runs_path, summary_path))
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>> {
    read_csv(path)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRecord>> {
    read_csv(path)
}
