//! Estimation error metrics.
//!
//! `e_x(t_k) = ‖T⁻¹(x̄_k − x̄̂_k)‖ / ‖T⁻¹x̄_k‖` on the augmented vector `[x; α]`
//! and the per-sample output noise level `d_n(t_k) = |y_k − y_meas,k| / |y_k|`.

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub e_x: Vec<f64>,
    pub d_n: Vec<f64>,
    pub alpha_error: Vec<f64>,
}

fn check(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { what, left, right });
    }
    Ok(())
}

pub fn relative_state_error(
    x: &DVector<f64>,
    alpha: f64,
    x_hat: &DVector<f64>,
    alpha_hat: f64,
    scaling: f64,
) -> f64 {
    let dx = (x - x_hat) / scaling;
    let num = (dx.norm_squared() + (alpha - alpha_hat).powi(2)).sqrt();
    let den = ((x / scaling).norm_squared() + alpha * alpha).sqrt();
    num / den
}

/// NaN where the clean output vanishes.
pub fn noise_level(y: &[f64], y_meas: &[f64]) -> Result<Vec<f64>> {
    check("clean vs measured outputs", y.len(), y_meas.len())?;
    Ok(y.iter()
        .zip(y_meas)
        .map(|(y, m)| if *y == 0.0 { if *m == 0.0 { 0.0 } else { f64::NAN } } else { (y - m).abs() / y.abs() })
        .collect())
}

#[allow(clippy::too_many_arguments)]
pub fn metrics(
    states: &[DVector<f64>],
    alpha: f64,
    y: &[f64],
    y_meas: &[f64],
    est_states: &[DVector<f64>],
    est_alpha: &[f64],
    scaling: f64,
) -> Result<Metrics> {
    check("truth vs estimated states", states.len(), est_states.len())?;
    check("truth states vs estimated α", states.len(), est_alpha.len())?;
    check("truth states vs outputs", states.len(), y.len())?;
    let e_x = states
        .iter()
        .zip(est_states)
        .zip(est_alpha)
        .map(|((x, xh), ah)| relative_state_error(x, alpha, xh, *ah, scaling))
        .collect();
    Ok(Metrics {
        e_x,
        d_n: noise_level(y, y_meas)?,
        alpha_error: est_alpha.iter().map(|a| (a - alpha).abs()).collect(),
    })
}

/// First sample time at which `series` drops below `tol`.
pub fn first_passage(time: &[f64], series: &[f64], tol: f64) -> Option<f64> {
    series.iter().position(|v| *v < tol).map(|i| time[i])
}

/// First time after which `series` stays below `tol` for good; `None` if the
/// last sample is not below.
pub fn settling_time(time: &[f64], series: &[f64], tol: f64) -> Option<f64> {
    let last_bad = series.iter().rposition(|v| !(*v < tol));
    match last_bad {
        None => time.first().copied(),
        Some(i) if i + 1 < series.len() => Some(time[i + 1]),
        Some(_) => None,
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) { 0.5 * (v[m - 1] + v[m]) } else { v[m] }
}
