//! Seed studies: one clean truth, many noise realisations, medians per
//! estimator.

use super::config::EstimatorSpec;
use super::pipeline::{build_estimator, run_estimator};
use crate::error::Result;
use crate::estimators::AugmentedModel;
use crate::sim::metrics::{first_passage, median, metrics};
use crate::sim::{NoiseSpec, TruthRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub name: String,
    /// Median over seeds of the first time with |α̂ − α| < tol; seeds that
    /// never get there count as +∞.
    pub convergence_time: f64,
    /// Medians of `e_x` and `d_n` pooled over seeds and samples with `t ≥ pooled_from`.
    pub e_x: f64,
    pub d_n: f64,
    pub mean_step_seconds: f64,
}

pub fn seed_study(
    model: &AugmentedModel,
    clean: &TruthRecord,
    specs: &[EstimatorSpec],
    variance: f64,
    seeds: std::ops::Range<u64>,
    tol: f64,
    pooled_from: f64,
) -> Result<Vec<StudyRow>> {
    let from = clean.time.iter().position(|t| *t >= pooled_from).unwrap_or(clean.len());
    let truths = seeds
        .map(|seed| clean.renoised(&NoiseSpec { variance, seed }))
        .collect::<Result<Vec<_>>>()?;
    specs
        .iter()
        .map(|spec| {
            let (mut conv, mut ex, mut dn) = (Vec::new(), Vec::new(), Vec::new());
            let (mut wall, mut steps) = (0.0, 0usize);
            for truth in &truths {
                let mut est = build_estimator(spec, model.clone())?;
                let trace = run_estimator(est.as_mut(), truth)?;
                let m = metrics(
                    &truth.states,
                    truth.alpha,
                    &truth.y_volume,
                    &truth.y_meas,
                    &trace.states,
                    &trace.alpha,
                    model.scaling()[0],
                )?;
                conv.push(first_passage(&truth.time, &m.alpha_error, tol).unwrap_or(f64::INFINITY));
                ex.extend_from_slice(&m.e_x[from..]);
                dn.extend_from_slice(&m.d_n[from..]);
                wall += trace.step_seconds.iter().sum::<f64>();
                steps += trace.step_seconds.len();
            }
            Ok(StudyRow {
                name: spec.name().to_string(),
                convergence_time: median(&conv),
                e_x: median(&ex),
                d_n: median(&dn),
                mean_step_seconds: wall / steps.max(1) as f64,
            })
        })
        .collect()
}
