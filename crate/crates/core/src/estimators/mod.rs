//! Joint estimation of the reduced state and the absorption prefactor α.

pub mod augmented;
pub mod ekf;
pub mod mhe;

use nalgebra::DVector;

pub use augmented::{AugmentedModel, DEFAULT_STATE_SCALING};
pub use ekf::{Ekf, EkfSettings};
pub use mhe::{Mhe, MheProblem, MheSettings, MheSolution};

use crate::error::Result;

/// One estimator output per measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Reduced state in model units (unscaled).
    pub state: DVector<f64>,
    pub alpha: f64,
    /// `y − g(x̄⁻)` before the measurement is taken into account.
    pub innovation: f64,
    /// MHE only.
    pub cost: Option<f64>,
    /// MHE only.
    pub iterations: Option<usize>,
    pub converged: bool,
}

/// Sequential estimator driven by one measurement per sampling instant.
pub trait Estimator {
    fn name(&self) -> &str;

    /// Feeds `y_k`. `input` is the power `u_{k−1}` held since the previous
    /// measurement and is `None` for the first sample.
    fn observe(&mut self, input: Option<f64>, y: f64) -> Result<Estimate>;
}

pub(crate) fn diag_from(values: &[f64]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_diagonal(&DVector::from_column_slice(values))
}
