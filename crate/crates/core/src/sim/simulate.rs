//! Time stepping of the full-order and reduced models.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::signal::InputSignal;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::fundus::FullOrderModel;
use crate::linalg::{self, SpdSolver};
use crate::pmor::DiscreteModel;

/// States above this magnitude (K) abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Crank–Nicolson, with two implicit-Euler half steps after every change
    /// of the input so stiff transients are damped instead of oscillating.
    CrankNicolson,
    ImplicitEuler,
}

#[derive(Debug, Clone, Copy)]
pub struct FullSimOptions {
    pub substeps: usize,
    pub integrator: Integrator,
    pub keep_states: bool,
}

impl Default for FullSimOptions {
    fn default() -> Self {
        Self {
            substeps: 10,
            integrator: Integrator::CrankNicolson,
            keep_states: false,
        }
    }
}

/// Integrates `D ẋ = G x + D b(α) u` from `x(0) = 0`.
pub fn simulate_full(
    model: &FullOrderModel,
    alpha: f64,
    input: &InputSignal,
    opts: &FullSimOptions,
) -> Result<Trajectory> {
    if opts.substeps == 0 {
        return Err(Error::Input("at least one substep per sample is required".into()));
    }
    let op = &model.operator;
    let d = op.volumes();
    let g = op.conductance();
    let dt = input.sample_time() / opts.substeps as f64;
    let db = model.b(alpha).component_mul(d);
    let c_vol = model.c_volume(alpha);
    let c_peak = model.peak_row();

    // CN uses D − dt/2 G; an implicit-Euler step of dt/2 uses the same matrix.
    let half: SpdSolver = op.factor_pencil(1.0, 0.5 * dt)?;
    let full = match opts.integrator {
        Integrator::ImplicitEuler => Some(op.factor_pencil(1.0, dt)?),
        Integrator::CrankNicolson => None,
    };

    let n_samples = input.len();
    let mut x = DVector::zeros(model.dim());
    let mut out = Trajectory {
        time: Vec::with_capacity(n_samples),
        input: input.samples().to_vec(),
        y_volume: Vec::with_capacity(n_samples),
        y_peak: Vec::with_capacity(n_samples),
        states: opts.keep_states.then(Vec::new),
    };
    let mut previous_u = f64::NAN;
    for (k, &u) in input.samples().iter().enumerate() {
        out.time.push(k as f64 * input.sample_time());
        out.y_volume.push(c_vol.dot(&x));
        out.y_peak.push(c_peak.dot(&x));
        if let Some(s) = out.states.as_mut() {
            s.push(x.clone());
        }
        if k + 1 == n_samples {
            break;
        }
        let jump = u != previous_u;
        previous_u = u;
        for sub in 0..opts.substeps {
            match (&full, jump && sub == 0) {
                (Some(ie), _) => {
                    let rhs = x.component_mul(d) + &db * (dt * u);
                    x = ie.solve(&rhs);
                }
                (None, true) => {
                    for _ in 0..2 {
                        let rhs = x.component_mul(d) + &db * (0.5 * dt * u);
                        x = half.solve(&rhs);
                    }
                }
                (None, false) => {
                    let gx = linalg::spmv(g, &x);
                    let rhs = x.component_mul(d) + gx * (0.5 * dt) + &db * (dt * u);
                    x = half.solve(&rhs);
                }
            }
        }
        let norm = x.amax();
        if !(norm <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { step: k + 1, norm });
        }
    }
    Ok(out)
}

/// Exact recursion of the discrete reduced model from `x_0 = 0`.
pub fn simulate_reduced(model: &DiscreteModel, alpha: f64, input: &InputSignal) -> Result<Trajectory> {
    if (input.sample_time() - model.sample_time).abs() > 1e-12 * model.sample_time {
        return Err(Error::Input(format!(
            "input sampled at {} s, model at {} s",
            input.sample_time(),
            model.sample_time
        )));
    }
    let b = model.b_at(alpha);
    let c = model.c_volume_at(alpha);
    let mut x = DVector::zeros(model.order());
    let n_samples = input.len();
    let mut out = Trajectory {
        time: Vec::with_capacity(n_samples),
        input: input.samples().to_vec(),
        y_volume: Vec::with_capacity(n_samples),
        y_peak: Vec::with_capacity(n_samples),
        states: Some(Vec::with_capacity(n_samples)),
    };
    for (k, &u) in input.samples().iter().enumerate() {
        out.time.push(k as f64 * input.sample_time());
        out.y_volume.push(c.dot(&x));
        out.y_peak.push(model.c_peak.dot(&x));
        if let Some(s) = out.states.as_mut() {
            s.push(x.clone());
        }
        x = &model.a * &x + &b * u;
    }
    Ok(out)
}
