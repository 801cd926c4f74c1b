//! assemble → reduce → discretize → truth → estimate → metrics → write.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::info;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::artifacts::{self, Manifest, StageTiming};
use super::config::{EstimatorSpec, RunConfig};
use super::{StageExt, StageFailure};
use crate::error::{Error, Result};
use crate::estimators::{AugmentedModel, Ekf, Estimator, Mhe};
use crate::fundus::FullOrderModel;
use crate::pmor::{discretize_zoh, reduce, DiscreteModel, ModelDocument, ReducedModel};
use crate::sim::metrics::{first_passage, median, metrics, settling_time, Metrics};
use crate::sim::{make_truth_full, make_truth_reduced, InputSignal, TruthRecord, TruthSource};

pub const MODEL_FILE: &str = "model.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FAILED_FILE: &str = "FAILED";
pub const ERROR_FILE: &str = "error.json";

/// Samples before this time are excluded from the steady-state figures.
pub const STEADY_FROM: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Reduce,
    Document(PathBuf),
}

#[derive(Debug, Clone)]
pub struct EstimatorTrace {
    pub name: String,
    pub states: Vec<DVector<f64>>,
    pub alpha: Vec<f64>,
    pub innovation: Vec<f64>,
    pub cost: Vec<Option<f64>>,
    pub iterations: Vec<Option<usize>>,
    pub converged: Vec<bool>,
    pub step_seconds: Vec<f64>,
}

pub fn build_estimator(spec: &EstimatorSpec, model: AugmentedModel) -> Result<Box<dyn Estimator>> {
    Ok(match spec {
        EstimatorSpec::Ekf { name, settings } => Box::new(Ekf::new(name.clone(), model, settings)?),
        EstimatorSpec::Mhe { name, settings } => Box::new(Mhe::new(name.clone(), model, settings)?),
    })
}

pub fn run_estimator(est: &mut dyn Estimator, truth: &TruthRecord) -> Result<EstimatorTrace> {
    let n = truth.len();
    let mut trace = EstimatorTrace {
        name: est.name().to_string(),
        states: Vec::with_capacity(n),
        alpha: Vec::with_capacity(n),
        innovation: Vec::with_capacity(n),
        cost: Vec::with_capacity(n),
        iterations: Vec::with_capacity(n),
        converged: Vec::with_capacity(n),
        step_seconds: Vec::with_capacity(n),
    };
    for k in 0..n {
        let input = (k > 0).then(|| truth.input[k - 1]);
        let t0 = Instant::now();
        let e = est.observe(input, truth.y_meas[k])?;
        trace.step_seconds.push(t0.elapsed().as_secs_f64());
        trace.states.push(e.state);
        trace.alpha.push(e.alpha);
        trace.innovation.push(e.innovation);
        trace.cost.push(e.cost);
        trace.iterations.push(e.iterations);
        trace.converged.push(e.converged);
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub name: String,
    /// First time with |α̂ − α| below the configured tolerance.
    pub convergence_time: Option<f64>,
    /// Time after which |α̂ − α| stays below the tolerance.
    pub settling_time: Option<f64>,
    pub final_alpha: f64,
    pub steady_e_x: f64,
    pub steady_d_n: f64,
    pub unconverged_steps: usize,
    pub mean_step_seconds: f64,
    pub max_step_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub alpha_true: f64,
    pub sample_time: f64,
    pub samples: usize,
    pub truth: TruthSource,
    pub alpha_tolerance: f64,
    pub estimators: Vec<EstimatorSummary>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub directory: PathBuf,
    pub summary: RunSummary,
    pub manifest: Manifest,
}

pub fn summarize(trace: &EstimatorTrace, m: &Metrics, time: &[f64], tol: f64) -> EstimatorSummary {
    let from = time.iter().position(|t| *t >= STEADY_FROM).unwrap_or(time.len());
    let n = trace.step_seconds.len().max(1) as f64;
    EstimatorSummary {
        name: trace.name.clone(),
        convergence_time: first_passage(time, &m.alpha_error, tol),
        settling_time: settling_time(time, &m.alpha_error, tol),
        final_alpha: trace.alpha.last().copied().unwrap_or(f64::NAN),
        steady_e_x: median(&m.e_x[from..]),
        steady_d_n: median(&m.d_n[from..]),
        unconverged_steps: trace.converged.iter().filter(|c| !**c).count(),
        mean_step_seconds: trace.step_seconds.iter().sum::<f64>() / n,
        max_step_seconds: trace.step_seconds.iter().copied().fold(0.0, f64::max),
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

struct Clock {
    timings: Vec<StageTiming>,
}

impl Clock {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> std::result::Result<T, StageFailure> {
        let t0 = Instant::now();
        let out = f().stage(stage)?;
        let seconds = t0.elapsed().as_secs_f64();
        info!("{stage}: {seconds:.3} s");
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds,
        });
        Ok(out)
    }
}

fn assemble(cfg: &RunConfig) -> Result<FullOrderModel> {
    FullOrderModel::assemble(
        &cfg.geometry,
        &cfg.grid,
        cfg.reduction.input_order,
        cfg.reduction.output_order,
    )
}

/// Assembles and reduces the model described by `cfg`.
pub fn build_models(cfg: &RunConfig) -> Result<(FullOrderModel, ReducedModel, DiscreteModel)> {
    let full = assemble(cfg)?;
    let rom = reduce(&full, &cfg.reduction.domain, &cfg.reduction.options())?;
    let dm = discretize_zoh(&rom, cfg.simulation.sample_time)?;
    Ok((full, rom, dm))
}

fn load_document(cfg: &RunConfig, path: &Path) -> Result<(ReducedModel, DiscreteModel)> {
    let (rom, dm) = ModelDocument::read(path)?.models()?;
    if (dm.sample_time - cfg.simulation.sample_time).abs() > 1e-12 * cfg.simulation.sample_time {
        return Err(Error::Config(format!(
            "model sampled at {} s, config at {} s",
            dm.sample_time, cfg.simulation.sample_time
        )));
    }
    if rom.order() != cfg.reduction.order {
        return Err(Error::Config(format!(
            "model has order {}, config asks for {}",
            rom.order(),
            cfg.reduction.order
        )));
    }
    if !dm.domain.contains(cfg.simulation.alpha_true) {
        return Err(Error::Config("alpha_true outside the model's parameter domain".into()));
    }
    Ok((rom, dm))
}

/// Reduction only: writes the model document into `dir`.
pub fn reduce_only(cfg: &RunConfig, dir: &Path) -> std::result::Result<PathBuf, StageFailure> {
    std::fs::create_dir_all(dir).map_err(Error::from).stage("output")?;
    clear_failure(dir).stage("output")?;
    let result = (|| {
        let mut clock = Clock { timings: Vec::new() };
        let full = clock.time("assemble", || assemble(cfg))?;
        let rom = clock.time("reduce", || reduce(&full, &cfg.reduction.domain, &cfg.reduction.options()))?;
        let dm = clock.time("discretize", || discretize_zoh(&rom, cfg.simulation.sample_time))?;
        let path = dir.join(MODEL_FILE);
        ModelDocument::new(&rom, &dm).write(&path).stage("write")?;
        Ok(path)
    })();
    if let Err(fail) = &result {
        artifacts::write_failure(dir, fail);
    }
    result
}

fn clear_failure(dir: &Path) -> Result<()> {
    for f in [FAILED_FILE, ERROR_FILE] {
        let p = dir.join(f);
        if p.exists() {
            std::fs::remove_file(p)?;
        }
    }
    Ok(())
}

/// Runs the full pipeline into `dir`. On failure the artifacts written so
/// far are kept next to a `FAILED` marker and `error.json`.
pub fn execute(cfg: &RunConfig, source: &ModelSource, dir: &Path) -> std::result::Result<RunReport, StageFailure> {
    cfg.validate().stage("config")?;
    std::fs::create_dir_all(dir).map_err(Error::from).stage("output")?;
    clear_failure(dir).stage("output")?;
    let result = run_stages(cfg, source, dir);
    if let Err(fail) = &result {
        artifacts::write_failure(dir, fail);
    }
    result
}

fn run_stages(cfg: &RunConfig, source: &ModelSource, dir: &Path) -> std::result::Result<RunReport, StageFailure> {
    let started = unix_now();
    let mut clock = Clock { timings: Vec::new() };
    let sim = &cfg.simulation;
    let need_full = matches!(source, ModelSource::Reduce) || sim.truth == TruthSource::Full;
    let full = if need_full {
        Some(clock.time("assemble", || assemble(cfg))?)
    } else {
        None
    };
    let (rom, dm) = match source {
        ModelSource::Reduce => {
            let full = full.as_ref().expect("assembled");
            let rom = clock.time("reduce", || reduce(full, &cfg.reduction.domain, &cfg.reduction.options()))?;
            let dm = clock.time("discretize", || discretize_zoh(&rom, sim.sample_time))?;
            (rom, dm)
        }
        ModelSource::Document(path) => clock.time("load_model", || load_document(cfg, path))?,
    };
    let mut files = Vec::new();
    let model_path = dir.join(MODEL_FILE);
    ModelDocument::new(&rom, &dm).write(&model_path).stage("write")?;
    files.push(MODEL_FILE.to_string());

    let truth = clock.time("truth", || {
        let input = InputSignal::constant(sim.power, sim.sample_time, InputSignal::steps_for(sim.t_final, sim.sample_time))?;
        match (sim.truth, full.as_ref()) {
            (TruthSource::Full, Some(full)) => make_truth_full(full, &rom, sim.alpha_true, &input, &sim.noise(), &sim.full_options()),
            (TruthSource::Full, None) => unreachable!("full model assembled for full truth"),
            (TruthSource::Reduced, _) => make_truth_reduced(&dm, sim.alpha_true, &input, &sim.noise()),
        }
    })?;
    artifacts::write_truth_csv(&dir.join(artifacts::TRUTH_FILE), &truth).stage("write")?;
    files.push(artifacts::TRUTH_FILE.to_string());

    let aug = AugmentedModel::new(dm.clone(), cfg.estimators.state_scaling);
    let traces = clock.time("estimate", || {
        cfg.estimator_specs()
            .iter()
            .map(|spec| {
                let mut est = build_estimator(spec, aug.clone())?;
                run_estimator(est.as_mut(), &truth)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    for trace in &traces {
        let name = artifacts::estimator_file(&trace.name);
        artifacts::write_estimator_csv(&dir.join(&name), &truth.time, trace, cfg.output.record_wall_time).stage("write")?;
        files.push(name);
    }

    let all_metrics = clock.time("metrics", || {
        traces
            .iter()
            .map(|t| {
                metrics(
                    &truth.states,
                    truth.alpha,
                    &truth.y_volume,
                    &truth.y_meas,
                    &t.states,
                    &t.alpha,
                    cfg.estimators.state_scaling,
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;
    artifacts::write_metrics_csv(&dir.join(artifacts::METRICS_FILE), &truth, &traces, &all_metrics).stage("write")?;
    files.push(artifacts::METRICS_FILE.to_string());

    let tol = cfg.estimators.alpha_tolerance;
    let summary = RunSummary {
        config_hash: cfg.hash(),
        alpha_true: sim.alpha_true,
        sample_time: sim.sample_time,
        samples: truth.len(),
        truth: truth.source,
        alpha_tolerance: tol,
        estimators: traces
            .iter()
            .zip(&all_metrics)
            .map(|(t, m)| summarize(t, m, &truth.time, tol))
            .collect(),
    };
    std::fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary).map_err(Error::from).stage("write")?)
        .map_err(Error::from)
        .stage("write")?;
    files.push(SUMMARY_FILE.to_string());

    let manifest = Manifest::new(cfg, started, unix_now(), clock.timings, dir, &files).stage("write")?;
    manifest.write(dir).stage("write")?;
    Ok(RunReport {
        directory: dir.to_path_buf(),
        summary,
        manifest,
    })
}
