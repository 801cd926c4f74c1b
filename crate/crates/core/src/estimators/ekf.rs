use nalgebra::{DMatrix, DVector};

use super::augmented::AugmentedModel;
use super::{diag_from, Estimate, Estimator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EkfSettings {
    /// Diagonal of the process covariance Q (scaled coordinates).
    pub q: Vec<f64>,
    pub r: f64,
    /// Diagonal of P₀; `None` uses Q.
    pub p0: Option<Vec<f64>>,
    pub alpha0: f64,
}

impl EkfSettings {
    pub fn reference(order: usize) -> Self {
        let mut q = vec![1e-3; order];
        q.push(0.15);
        Self {
            q,
            r: 1e2,
            p0: None,
            alpha0: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ekf {
    name: String,
    model: AugmentedModel,
    z: DVector<f64>,
    p: DMatrix<f64>,
    q: DMatrix<f64>,
    r: f64,
}

impl Ekf {
    pub fn new(name: impl Into<String>, model: AugmentedModel, settings: &EkfSettings) -> Result<Self> {
        let m = model.dim();
        if settings.q.len() != m {
            return Err(Error::LengthMismatch {
                what: "EKF Q diagonal vs augmented state",
                left: settings.q.len(),
                right: m,
            });
        }
        if settings.q.iter().any(|v| !(*v >= 0.0)) || !(settings.r > 0.0) {
            return Err(Error::Estimator("Q must be nonnegative and R positive".into()));
        }
        let p0 = settings.p0.clone().unwrap_or_else(|| settings.q.clone());
        if p0.len() != m {
            return Err(Error::LengthMismatch {
                what: "EKF P0 diagonal vs augmented state",
                left: p0.len(),
                right: m,
            });
        }
        let mut z = DVector::zeros(m);
        z[m - 1] = settings.alpha0;
        Ok(Self {
            name: name.into(),
            z,
            p: diag_from(&p0),
            q: diag_from(&settings.q),
            r: settings.r,
            model,
        })
    }

    pub fn scaled_state(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// `z⁻ = f(z, u)`, `P⁻ = F P Fᵀ + Q`. With `u = 0` α is unobservable and its
    /// variance is not inflated.
    pub fn predict(&mut self, u: f64) {
        let f = self.model.transition_jacobian(&self.z, u);
        self.z = self.model.transition(&self.z, u);
        let mut q = self.q.clone();
        if u == 0.0 {
            let m = q.nrows() - 1;
            q[(m, m)] = 0.0;
        }
        self.p = &f * &self.p * f.transpose() + q;
        symmetrize(&mut self.p);
    }

    /// Measurement update with Joseph-form covariance; returns the innovation.
    pub fn update(&mut self, y: f64) -> Result<f64> {
        let h = self.model.output_jacobian(&self.z);
        let innovation = y - self.model.output(&self.z);
        let ph = &self.p * &h;
        let s = h.dot(&ph) + self.r;
        if !(s > 0.0) {
            return Err(Error::Innovation(s));
        }
        let k = ph / s;
        self.z += &k * innovation;
        let m = self.z.len();
        let ikh = DMatrix::identity(m, m) - &k * h.transpose();
        self.p = &ikh * &self.p * ikh.transpose() + &k * k.transpose() * self.r;
        symmetrize(&mut self.p);
        Ok(innovation)
    }
}

fn symmetrize(p: &mut DMatrix<f64>) {
    let t = p.transpose();
    *p += t;
    *p *= 0.5;
}

impl Estimator for Ekf {
    fn name(&self) -> &str {
        &self.name
    }

    fn observe(&mut self, input: Option<f64>, y: f64) -> Result<Estimate> {
        if let Some(u) = input {
            self.predict(u);
        }
        let innovation = self.update(y)?;
        let (state, alpha) = self.model.unscale(&self.z);
        Ok(Estimate {
            state,
            alpha,
            innovation,
            cost: None,
            iterations: None,
            converged: true,
        })
    }
}
