//! Augmented dynamics `x̄ = (x, α)` in the scaled coordinates `z = T⁻¹x̄`.

use nalgebra::{DMatrix, DVector};

use crate::pmor::DiscreteModel;

/// Default entry of `T` for the reduced states.
pub const DEFAULT_STATE_SCALING: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AugmentedModel {
    model: DiscreteModel,
    scale: DVector<f64>,
}

impl AugmentedModel {
    pub fn new(model: DiscreteModel, state_scaling: f64) -> Self {
        let n = model.order();
        let mut scale = DVector::from_element(n + 1, state_scaling);
        scale[n] = 1.0;
        Self { model, scale }
    }

    pub fn model(&self) -> &DiscreteModel {
        &self.model
    }

    /// Reduced order n; the augmented dimension is n + 1.
    pub fn order(&self) -> usize {
        self.model.order()
    }

    pub fn dim(&self) -> usize {
        self.order() + 1
    }

    /// Diagonal of `T`.
    pub fn scaling(&self) -> &DVector<f64> {
        &self.scale
    }

    pub fn to_scaled(&self, x: &DVector<f64>, alpha: f64) -> DVector<f64> {
        let n = self.order();
        DVector::from_fn(n + 1, |i, _| if i < n { x[i] / self.scale[i] } else { alpha })
    }

    /// `(x, α)` from scaled coordinates.
    pub fn unscale(&self, z: &DVector<f64>) -> (DVector<f64>, f64) {
        let n = self.order();
        (DVector::from_fn(n, |i, _| z[i] * self.scale[i]), z[n])
    }

    /// `T⁻¹ f(T z, u)`.
    pub fn transition(&self, z: &DVector<f64>, u: f64) -> DVector<f64> {
        let (x, alpha) = self.unscale(z);
        let next = self.model.step(&x, alpha, u);
        self.to_scaled(&next, alpha)
    }

    /// `T⁻¹ (∂f/∂x̄) T`.
    pub fn transition_jacobian(&self, z: &DVector<f64>, u: f64) -> DMatrix<f64> {
        let n = self.order();
        let alpha = z[n];
        let db = self.model.db_at(alpha) * u;
        let mut f = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                f[(i, j)] = self.model.a[(i, j)] * self.scale[j] / self.scale[i];
            }
            f[(i, n)] = db[i] / self.scale[i];
        }
        f[(n, n)] = 1.0;
        f
    }

    /// `g(T z) = c_vol(α) x`.
    pub fn output(&self, z: &DVector<f64>) -> f64 {
        let (x, alpha) = self.unscale(z);
        self.model.c_volume_at(alpha).dot(&x)
    }

    /// `(∂g/∂x̄) T` as a row vector.
    pub fn output_jacobian(&self, z: &DVector<f64>) -> DVector<f64> {
        let n = self.order();
        let (x, alpha) = self.unscale(z);
        let c = self.model.c_volume_at(alpha);
        let dc = self.model.dc_volume_at(alpha);
        DVector::from_fn(n + 1, |i, _| if i < n { c[i] * self.scale[i] } else { dc.dot(&x) })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::pmor::ParamDomain;

    /// Small stable discrete model with nontrivial α-dependence, in units
    /// matching the default scaling.
    pub(crate) fn toy_model() -> DiscreteModel {
        let a = DMatrix::from_row_slice(3, 3, &[0.95, 0.02, 0.0, 0.01, 0.9, 0.03, 0.0, 0.02, 0.6]);
        let b = vec![
            DVector::from_vec(vec![4e-6, 2e-6, 1e-6]),
            DVector::from_vec(vec![1e-6, -5e-7, 2e-7]),
            DVector::from_vec(vec![-3e-7, 1e-7, 5e-8]),
        ];
        let c = vec![
            DVector::from_vec(vec![0.5e8, 0.3e8, 0.2e8]),
            DVector::from_vec(vec![0.1e8, -0.05e8, 0.02e8]),
            DVector::from_vec(vec![-0.02e8, 0.01e8, 0.0]),
        ];
        DiscreteModel {
            a,
            b,
            c_volume: c,
            c_peak: DVector::from_vec(vec![1e8, 1e8, 1e8]),
            sample_time: 0.004,
            domain: ParamDomain::default(),
        }
    }

    fn fd_check(model: &AugmentedModel, z: &DVector<f64>, u: f64) -> (f64, f64) {
        let n = model.dim();
        let jf = model.transition_jacobian(z, u);
        let jg = model.output_jacobian(z);
        let (mut ef, mut eg) = (0.0f64, 0.0f64);
        for j in 0..n {
            let h = 1e-6 * (1.0 + z[j].abs());
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let col = (model.transition(&zp, u) - model.transition(&zm, u)) / (2.0 * h);
            ef = ef.max((col - jf.column(j)).amax() / jf.amax());
            let dg = (model.output(&zp) - model.output(&zm)) / (2.0 * h);
            eg = eg.max((dg - jg[j]).abs() / jg.amax());
        }
        (ef, eg)
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let m = AugmentedModel::new(toy_model(), DEFAULT_STATE_SCALING);
        let z = DVector::from_vec(vec![20.0, 35.0, 41.0, 0.27]);
        let (ef, eg) = fd_check(&m, &z, 0.03);
        assert!(ef < 1e-6 && eg < 1e-6, "{ef:e} {eg:e}");
    }

    #[test]
    fn alpha_column_at_zero_is_first_taylor_term() {
        let m = AugmentedModel::new(toy_model(), DEFAULT_STATE_SCALING);
        let z = DVector::from_vec(vec![1.0, 2.0, 3.0, 0.0]);
        let f = m.transition_jacobian(&z, 0.03);
        for i in 0..3 {
            let want = m.model().b[1][i] * 0.03 / DEFAULT_STATE_SCALING;
            assert!((f[(i, 3)] - want).abs() <= 1e-12 * want.abs());
        }
        let f0 = m.transition_jacobian(&z, 0.0);
        assert_eq!(f0.column(3).rows(0, 3).amax(), 0.0);
    }

    #[test]
    fn scaling_round_trip() {
        let m = AugmentedModel::new(toy_model(), DEFAULT_STATE_SCALING);
        let x = DVector::from_vec(vec![1e-7, 2e-7, -3e-8]);
        let z = m.to_scaled(&x, 0.1);
        assert!((z[0] - 10.0).abs() < 1e-12);
        let (back, a) = m.unscale(&z);
        assert!((back - x).amax() < 1e-20 && a == 0.1);
    }
}
