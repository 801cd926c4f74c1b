//! Side-by-side tables of finished runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::pipeline::{RunSummary, SUMMARY_FILE};
use crate::error::{Error, Result};

pub const COMPARISON_CSV: &str = "comparison.csv";
pub const COMPARISON_TXT: &str = "comparison.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub run: String,
    pub estimator: String,
    pub convergence_time: Option<f64>,
    pub settling_time: Option<f64>,
    pub steady_e_x: f64,
    pub mean_step_seconds: f64,
    /// Differences to the same estimator in the first run.
    pub delta_convergence_time: Option<f64>,
    pub delta_steady_e_x: Option<f64>,
}

pub fn read_summary(dir: &Path) -> Result<RunSummary> {
    let path = dir.join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Incompatible(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn compare_runs(dirs: &[PathBuf]) -> Result<Vec<ComparisonRow>> {
    if dirs.len() < 2 {
        return Err(Error::Incompatible("at least two runs are needed".into()));
    }
    let summaries = dirs.iter().map(|d| read_summary(d)).collect::<Result<Vec<_>>>()?;
    let reference = &summaries[0];
    for (dir, s) in dirs.iter().zip(&summaries).skip(1) {
        if (s.sample_time - reference.sample_time).abs() > 1e-12 * reference.sample_time || s.samples != reference.samples {
            return Err(Error::Incompatible(format!(
                "{} has {} samples at {} s, {} has {} at {} s",
                dir.display(),
                s.samples,
                s.sample_time,
                dirs[0].display(),
                reference.samples,
                reference.sample_time
            )));
        }
    }
    let mut rows = Vec::new();
    for (dir, s) in dirs.iter().zip(&summaries) {
        for e in &s.estimators {
            let base = reference.estimators.iter().find(|r| r.name == e.name);
            rows.push(ComparisonRow {
                run: dir.display().to_string(),
                estimator: e.name.clone(),
                convergence_time: e.convergence_time,
                settling_time: e.settling_time,
                steady_e_x: e.steady_e_x,
                mean_step_seconds: e.mean_step_seconds,
                delta_convergence_time: base.and_then(|b| Some(e.convergence_time? - b.convergence_time?)),
                delta_steady_e_x: base.map(|b| e.steady_e_x - b.steady_e_x),
            });
        }
    }
    Ok(rows)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn write_comparison(rows: &[ComparisonRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(COMPARISON_CSV))?;
    w.write_record([
        "run",
        "estimator",
        "convergence_time",
        "settling_time",
        "steady_e_x",
        "mean_step_seconds",
        "delta_convergence_time",
        "delta_steady_e_x",
    ])?;
    for r in rows {
        w.write_record([
            r.run.clone(),
            r.estimator.clone(),
            cell(r.convergence_time),
            cell(r.settling_time),
            format!("{}", r.steady_e_x),
            format!("{}", r.mean_step_seconds),
            cell(r.delta_convergence_time),
            cell(r.delta_steady_e_x),
        ])?;
    }
    w.flush()?;
    std::fs::write(dir.join(COMPARISON_TXT), render(rows))?;
    Ok(())
}

pub fn render(rows: &[ComparisonRow]) -> String {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<40} {:<16} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "run", "estimator", "t_conv[s]", "t_settle", "e_x", "step[ms]", "Δt_conv"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<40} {:<16} {:>10} {:>10} {:>10.4} {:>10.3} {:>10}",
            r.run,
            r.estimator,
            fmt(r.convergence_time),
            fmt(r.settling_time),
            r.steady_e_x,
            r.mean_step_seconds * 1e3,
            fmt(r.delta_convergence_time)
        );
    }
    out
}
