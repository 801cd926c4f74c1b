use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter domain 𝒟 = [min, max] for the absorption prefactor α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct ParamDomain {
    min: f64,
    max: f64,
}

impl ParamDomain {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let fail = |reason: &str| Error::Domain {
            min,
            max,
            reason: reason.into(),
        };
        if !(min.is_finite() && max.is_finite()) {
            return Err(fail("bounds must be finite"));
        }
        if !(min < max) {
            return Err(fail("min must be below max"));
        }
        if !(min <= 0.0 && 0.0 <= max) {
            return Err(fail("the expansion point 0 must lie inside"));
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, alpha: f64) -> bool {
        (self.min..=self.max).contains(&alpha)
    }

    pub fn clamp(&self, alpha: f64) -> f64 {
        alpha.clamp(self.min, self.max)
    }
}

impl Default for ParamDomain {
    fn default() -> Self {
        Self {
            min: -0.5,
            max: 0.5,
        }
    }
}

impl TryFrom<[f64; 2]> for ParamDomain {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }
}

impl From<ParamDomain> for [f64; 2] {
    fn from(d: ParamDomain) -> Self {
        [d.min, d.max]
    }
}

/// `M[i][j] = ∫_𝒟 α^{i+j} dα` for `i, j ≤ max_order`.
pub fn moment_matrix(domain: &ParamDomain, max_order: usize) -> DMatrix<f64> {
    let k = max_order + 1;
    DMatrix::from_fn(k, k, |i, j| {
        let p = (i + j + 1) as i32;
        (domain.max.powi(p) - domain.min.powi(p)) / p as f64
    })
}

/// Relative eigenvalue threshold below which moment directions are dropped.
pub const MOMENT_RANK_TOL: f64 = 1e-12;

/// Factor `L` with `L Lᵀ = M` from the eigendecomposition, keeping only
/// eigenvalues above `MOMENT_RANK_TOL · λ_max`; columns ordered by decreasing
/// eigenvalue.
pub fn moment_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let lmax = eig.eigenvalues.max();
    if !(lmax > 0.0) {
        return Err(Error::Moments("moment matrix has no positive eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > MOMENT_RANK_TOL * lmax)
        .collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut l = DMatrix::zeros(m.nrows(), order.len());
    for (c, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i) * eig.eigenvalues[i].sqrt();
        l.set_column(c, &col);
    }
    Ok(l)
}
