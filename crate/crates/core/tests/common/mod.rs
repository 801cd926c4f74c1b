#![allow(dead_code)]

use fundus_core::fundus::{FullOrderModel, FundusGeometry, GridSpec};

/// First positive zero of J₀ from its power series, by bisection on [2, 3].
pub fn bessel_j0_first_zero() -> f64 {
    fn j0(x: f64) -> f64 {
        let q = -(x * x) / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..60 {
            term *= q / (m as f64 * m as f64);
            sum += term;
        }
        sum
    }
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if j0(lo) * j0(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest Dirichlet eigenvalue of −Δ on the cylinder `r < radius`, `0 < z < length`.
pub fn cylinder_ground_eigenvalue(radius: f64, length: f64) -> f64 {
    (bessel_j0_first_zero() / radius).powi(2) + (std::f64::consts::PI / length).powi(2)
}

pub fn default_model() -> FullOrderModel {
    FullOrderModel::assemble(&FundusGeometry::default(), &GridSpec::default(), 8, 8).unwrap()
}

pub fn coarse_model() -> FullOrderModel {
    FullOrderModel::assemble(&FundusGeometry::default(), &GridSpec::default().coarsened().unwrap(), 8, 8).unwrap()
}
