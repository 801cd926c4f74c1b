//! CSV and JSON artifacts of a run.
//!
//! Floats are written with Rust's shortest round-trip formatting, so the CSV
//! files are byte-identical for identical inputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::pipeline::{EstimatorTrace, ERROR_FILE, FAILED_FILE};
use super::StageFailure;
use crate::error::Result;
use crate::sim::metrics::Metrics;
use crate::sim::{TruthRecord, NOISE_GENERATOR};

pub const TRUTH_FILE: &str = "truth.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn estimator_file(name: &str) -> String {
    format!("estimator_{name}.csv")
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_truth_csv(path: &Path, truth: &TruthRecord) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let n = truth.states.first().map_or(0, |x| x.len());
    let mut header: Vec<String> = ["t", "u", "y_vol", "y_peak", "y_meas"].map(String::from).to_vec();
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.push("alpha".into());
    w.write_record(&header)?;
    for k in 0..truth.len() {
        let mut row = vec![
            num(truth.time[k]),
            num(truth.input[k]),
            num(truth.y_volume[k]),
            num(truth.y_peak[k]),
            num(truth.y_meas[k]),
        ];
        row.extend(truth.states[k].iter().map(|v| num(*v)));
        row.push(num(truth.alpha));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_estimator_csv(path: &Path, time: &[f64], trace: &EstimatorTrace, wall_time: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let n = trace.states.first().map_or(0, |x| x.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_hat{i}")));
    header.extend(["alpha_hat", "innovation", "cost", "iterations", "converged"].map(String::from));
    if wall_time {
        header.push("wall_time_s".into());
    }
    w.write_record(&header)?;
    for k in 0..time.len() {
        let mut row = vec![num(time[k])];
        row.extend(trace.states[k].iter().map(|v| num(*v)));
        row.push(num(trace.alpha[k]));
        row.push(num(trace.innovation[k]));
        row.push(opt(trace.cost[k]));
        row.push(opt(trace.iterations[k]));
        row.push(u8::from(trace.converged[k]).to_string());
        if wall_time {
            row.push(num(trace.step_seconds[k]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_csv(path: &Path, truth: &TruthRecord, traces: &[EstimatorTrace], metrics: &[Metrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string(), "d_n".to_string()];
    for t in traces {
        header.push(format!("e_x_{}", t.name));
        header.push(format!("alpha_err_{}", t.name));
    }
    w.write_record(&header)?;
    let d_n = crate::sim::metrics::noise_level(&truth.y_volume, &truth.y_meas)?;
    for k in 0..truth.len() {
        let mut row = vec![num(truth.time[k]), num(d_n[k])];
        for m in metrics {
            row.push(num(m.e_x[k]));
            row.push(num(m.alpha_error[k]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub code_version: String,
    pub noise_generator: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub stages: Vec<StageTiming>,
    pub files: Vec<FileEntry>,
    pub config: RunConfig,
}

pub fn file_entry(dir: &Path, name: &str) -> Result<FileEntry> {
    let bytes = std::fs::read(dir.join(name))?;
    Ok(FileEntry {
        name: name.to_string(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl Manifest {
    pub fn new(
        cfg: &RunConfig,
        started_unix: f64,
        finished_unix: f64,
        stages: Vec<StageTiming>,
        dir: &Path,
        files: &[String],
    ) -> Result<Self> {
        Ok(Self {
            config_hash: cfg.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            noise_generator: NOISE_GENERATOR.to_string(),
            started_unix,
            finished_unix,
            stages,
            files: files.iter().map(|f| file_entry(dir, f)).collect::<Result<_>>()?,
            config: cfg.clone(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub stage: String,
    pub message: String,
}

/// Best effort: the run has already failed, so write errors are only logged.
pub fn write_failure(dir: &Path, fail: &StageFailure) {
    let record = ErrorRecord {
        stage: fail.stage.to_string(),
        message: fail.source.to_string(),
    };
    let written = std::fs::write(dir.join(FAILED_FILE), format!("{}\n", fail.stage)).and_then(|_| {
        std::fs::write(
            dir.join(ERROR_FILE),
            serde_json::to_string_pretty(&record).unwrap_or_default(),
        )
    });
    if let Err(e) = written {
        log::error!("could not record failure in {}: {e}", dir.display());
    }
}
