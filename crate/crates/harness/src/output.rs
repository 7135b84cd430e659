use std::fs;
use std::path::Path;

use serde::Serialize;

use safebai::bai::{Phase, RunRecord};
use safebai::theory::ComplexityReport;

use crate::aggregate::{AggregateRow, AGGREGATE_HEADER};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::runner::{ALGO_CHANNEL, ENV_CHANNEL};

pub const RUN_HEADER: [&str; 8] = ["round", "phase", "arm", "coefficient", "reward", "safety_obs", "violated", "B_stat"];

pub fn version() -> String {
    format!("safebai {} ({})", env!("CARGO_PKG_VERSION"), env!("SAFEBAI_GIT_DESCRIBE"))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::io(path, e))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run_file_name(index: usize) -> String {
    format!("run_{index:04}.csv")
}

/// One row per pull; arms are numbered from 1.
pub fn write_run_csv(path: &Path, record: &RunRecord) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e: csv::Error| Error::io(path, e);
    w.write_record(RUN_HEADER).map_err(err)?;
    for p in &record.pulls {
        let phase = match p.phase {
            Phase::FE => "FE",
            Phase::BAI => "BAI",
        };
        w.write_record([
            p.round.to_string(),
            phase.to_string(),
            (p.arm + 1).to_string(),
            p.coefficient.to_string(),
            p.reward.to_string(),
            opt(p.safety),
            (p.violated as u8).to_string(),
            opt(p.b_stat),
        ])
        .map_err(err)?;
    }
    finish(w, path)
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(AGGREGATE_HEADER).map_err(|e| Error::io(path, e))?;
    for r in rows {
        w.write_record(r.fields()).map_err(|e| Error::io(path, e))?;
    }
    finish(w, path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub algorithm: String,
    pub forced_exploration: String,
    pub mean_tau: f64,
    pub unsafe_pct: f64,
}

pub fn write_table1_csv(path: &Path, rows: &[Table1Row]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::io(path, e))?;
    }
    finish(w, path)
}

/// One plotted series: `x` against mean with a min/max band.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn write_series_csv(path: &Path, x_name: &str, s: &Series) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e: csv::Error| Error::io(path, e);
    w.write_record([x_name, "mean", "min", "max"]).map_err(err)?;
    for i in 0..s.x.len() {
        w.write_record([s.x[i].to_string(), s.mean[i].to_string(), s.min[i].to_string(), s.max[i].to_string()])
            .map_err(err)?;
    }
    finish(w, path)
}

#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub master_seed: u64,
    pub replications: usize,
    pub environment_channel: u64,
    pub algorithm_channel: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complexity_report: Option<ComplexityReport>,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig, files: Vec<String>, report: Option<ComplexityReport>) -> Self {
        Self {
            version: version(),
            command: command.to_string(),
            config: config.clone(),
            seeds: Seeds {
                master_seed: config.experiment.master_seed,
                replications: config.experiment.replications,
                environment_channel: ENV_CHANNEL,
                algorithm_channel: ALGO_CHANNEL,
            },
            files,
            complexity_report: report,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}
