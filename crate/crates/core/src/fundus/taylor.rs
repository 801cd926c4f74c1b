//! Absorption-parameterised input and output operators and their Taylor coefficients.
//!
//! With `µ = (1 + α) µ₀` the Lambert–Beer attenuation between two depths is
//! `e^{−(1+α)s₁} − e^{−(1+α)s₂}` where `s` is the nominal optical depth. Its
//! Taylor coefficients in α are `e^{−s}(−s)ⁱ/i!` evaluated at both ends, so the
//! control-volume integrals of the source and of the volume-temperature weight
//! have exact polynomial coefficients.

use std::f64::consts::PI;

use nalgebra::DVector;

use super::geometry::FundusGeometry;
use super::grid::AxiGrid;

/// i-th α-Taylor coefficient of `e^{−(1+α)s}`.
pub fn attenuation_coefficient(s: f64, i: usize) -> f64 {
    (-s).exp() * (-s).powi(i as i32) / factorial(i)
}

/// Taylor coefficients `0..=order` of `e^{−(1+α)s₁} − e^{−(1+α)s₂}`, the fraction of
/// the incident power absorbed between optical depths `s₁ ≤ s₂`.
pub fn absorbed_fraction_taylor(s1: f64, s2: f64, order: usize) -> Vec<f64> {
    (0..=order)
        .map(|i| {
            if s1 == s2 {
                0.0
            } else {
                attenuation_coefficient(s1, i) - attenuation_coefficient(s2, i)
            }
        })
        .collect()
}

pub fn absorbed_fraction(s1: f64, s2: f64, alpha: f64) -> f64 {
    (-(1.0 + alpha) * s1).exp() - (-(1.0 + alpha) * s2).exp()
}

/// Pointwise i-th Taylor coefficient of the source density per watt,
/// `µ₀ e^{−s} ((−s)ⁱ + i(−s)ⁱ⁻¹) / (i! π R_I² ρ C_p)`, inside the spot.
pub fn source_density_coefficient(geometry: &FundusGeometry, z: f64, i: usize) -> f64 {
    let mu = geometry.absorption_at(z);
    if mu == 0.0 {
        return 0.0;
    }
    let s = geometry.optical_depth(z);
    let poly = (-s).powi(i as i32)
        + if i > 0 {
            i as f64 * (-s).powi(i as i32 - 1)
        } else {
            0.0
        };
    mu * (-s).exp() * poly / factorial(i) / spot_heat_scale(geometry)
}

/// Direct (non-expanded) source density `(1+α)µ₀ e^{−(1+α)s} / (π R_I² ρ C_p)`.
pub fn source_density(geometry: &FundusGeometry, z: f64, alpha: f64) -> f64 {
    let mu = geometry.absorption_at(z);
    (1.0 + alpha) * mu * (-(1.0 + alpha) * geometry.optical_depth(z)).exp()
        / spot_heat_scale(geometry)
}

fn spot_heat_scale(geometry: &FundusGeometry) -> f64 {
    PI * geometry.spot_radius.powi(2) * geometry.materials.volumetric_heat_capacity()
}

/// Area of radial cell `i` inside the irradiated disk.
fn spot_overlap(grid: &AxiGrid, i: usize, spot_radius: f64) -> f64 {
    let (lo, hi) = grid.radial_cell(i);
    let (lo, hi) = (lo.min(spot_radius), hi.min(spot_radius));
    PI * (hi * hi - lo * lo)
}

/// Per unknown: `(fraction of the cell cross-section inside the spot, s(z₋), s(z₊), cell height)`.
fn cell_optics(grid: &AxiGrid, geometry: &FundusGeometry) -> Vec<(f64, f64, f64, f64, f64)> {
    (0..grid.n_unknowns())
        .map(|u| {
            let (i, j) = grid.node(u);
            let overlap = spot_overlap(grid, i, geometry.spot_radius);
            let (zl, zh) = grid.axial_cell(j);
            (
                overlap,
                grid.cell_area(i),
                geometry.optical_depth(zl),
                geometry.optical_depth(zh),
                zh - zl,
            )
        })
        .collect()
}

/// Taylor coefficients `b_0..b_{order}` of the cell-averaged source per watt (K/(s·W)).
pub fn source_taylor(grid: &AxiGrid, geometry: &FundusGeometry, order: usize) -> Vec<DVector<f64>> {
    let n = grid.n_unknowns();
    let mut out = vec![DVector::zeros(n); order + 1];
    let scale = spot_heat_scale(geometry);
    for (u, (overlap, area, s1, s2, height)) in cell_optics(grid, geometry).into_iter().enumerate() {
        if overlap == 0.0 {
            continue;
        }
        let w = overlap / area / height / scale;
        for (i, c) in absorbed_fraction_taylor(s1, s2, order).into_iter().enumerate() {
            out[i][u] = w * c;
        }
    }
    out
}

/// Source vector b(α) assembled directly from the exponentials.
pub fn source_direct(grid: &AxiGrid, geometry: &FundusGeometry, alpha: f64) -> DVector<f64> {
    let scale = spot_heat_scale(geometry);
    let cells = cell_optics(grid, geometry);
    DVector::from_iterator(
        cells.len(),
        cells.into_iter().map(|(overlap, area, s1, s2, height)| {
            if overlap == 0.0 {
                0.0
            } else {
                overlap / area / height / scale * absorbed_fraction(s1, s2, alpha)
            }
        }),
    )
}

/// Taylor coefficients of the volume-temperature row: disk average over the spot
/// weighted by the power absorbed in each cell.
pub fn volume_output_taylor(
    grid: &AxiGrid,
    geometry: &FundusGeometry,
    order: usize,
) -> Vec<DVector<f64>> {
    let n = grid.n_unknowns();
    let mut out = vec![DVector::zeros(n); order + 1];
    let disk = PI * geometry.spot_radius.powi(2);
    for (u, (overlap, _, s1, s2, _)) in cell_optics(grid, geometry).into_iter().enumerate() {
        if overlap == 0.0 {
            continue;
        }
        for (i, c) in absorbed_fraction_taylor(s1, s2, order).into_iter().enumerate() {
            out[i][u] = overlap / disk * c;
        }
    }
    out
}

/// Volume-temperature row C_vol(α) assembled directly from the exponentials.
pub fn volume_output_direct(grid: &AxiGrid, geometry: &FundusGeometry, alpha: f64) -> DVector<f64> {
    let disk = PI * geometry.spot_radius.powi(2);
    let cells = cell_optics(grid, geometry);
    DVector::from_iterator(
        cells.len(),
        cells.into_iter().map(|(overlap, _, s1, s2, _)| {
            if overlap == 0.0 {
                0.0
            } else {
                overlap / disk * absorbed_fraction(s1, s2, alpha)
            }
        }),
    )
}

/// Point evaluation at the peak node; independent of α.
pub fn peak_output(grid: &AxiGrid) -> DVector<f64> {
    let mut row = DVector::zeros(grid.n_unknowns());
    row[grid.peak_unknown()] = 1.0;
    row
}

fn factorial(i: usize) -> f64 {
    (1..=i).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundus::grid::{build_grid, GridSpec};
    use crate::linalg::taylor_sum;

    fn setup() -> (FundusGeometry, AxiGrid) {
        let geo = FundusGeometry::default();
        let grid = build_grid(&geo, &GridSpec::default()).unwrap();
        (geo, grid)
    }

    #[test]
    fn zeroth_density_at_rpe_top() {
        let geo = FundusGeometry::default();
        let b0 = source_density_coefficient(&geo, 190e-6, 0);
        let expected = 1204e2 / (PI * 1e-8 * 993.0 * 4176.0);
        assert!(((b0 - expected) / expected).abs() < 1e-14);
        assert_eq!(source_density_coefficient(&geo, 100e-6, 3), 0.0);
    }

    #[test]
    fn pointwise_coefficients_match_finite_differences_in_alpha() {
        // Finite-difference oracle of f(α) = source_density(z, α) at α = 0.
        let geo = FundusGeometry::default();
        let binom = |n: usize, k: usize| -> f64 {
            (0..k).map(|t| (n - t) as f64 / (t + 1) as f64).product()
        };
        let central = |z: f64, i: usize, h: f64| -> f64 {
            let mut d = 0.0;
            for k in 0..=i {
                let a = (k as f64 - i as f64 / 2.0) * h;
                let sign = if (i - k).is_multiple_of(2) { 1.0 } else { -1.0 };
                d += sign * binom(i, k) * source_density(&geo, z, a);
            }
            d / h.powi(i as i32) / factorial(i)
        };
        for z in [190.5e-6, 193e-6, 195.5e-6, 250e-6] {
            for i in 1..=4usize {
                // Richardson step removes the O(h²) term of the central stencil.
                let h = 1e-2;
                let fd = (4.0 * central(z, i, h / 2.0) - central(z, i, h)) / 3.0;
                let exact = source_density_coefficient(&geo, z, i);
                let scale = exact.abs().max(source_density_coefficient(&geo, z, 0).abs());
                assert!(((fd - exact) / scale).abs() < 1e-4, "z={z} i={i}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn taylor_sum_matches_direct_source_at_rpe_nodes() {
        let (geo, grid) = setup();
        let b = source_taylor(&grid, &geo, 8);
        let alpha = 0.2;
        let approx = taylor_sum(&b, alpha);
        let direct = source_direct(&grid, &geo, alpha);
        let rpe = geo.peak_layer_index().unwrap();
        let mut checked = 0;
        for u in 0..grid.n_unknowns() {
            let (_, j) = grid.node(u);
            if grid.node_layer(j) == rpe && direct[u] != 0.0 {
                assert!(((approx[u] - direct[u]) / direct[u]).abs() < 1e-6);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn source_vanishes_outside_spot() {
        let (geo, grid) = setup();
        for b in source_taylor(&grid, &geo, 3) {
            for u in 0..grid.n_unknowns() {
                let (i, _) = grid.node(u);
                if grid.radial_nodes()[i] > geo.spot_radius {
                    assert_eq!(b[u], 0.0);
                }
            }
        }
    }

    #[test]
    fn unit_field_volume_output_is_absorbed_fraction() {
        let (geo, grid) = setup();
        let ones = DVector::from_element(grid.n_unknowns(), 1.0);
        let c0 = &volume_output_taylor(&grid, &geo, 0)[0];
        let expected = 1.0 - (-(1204e2 * 6e-6) - 270e2 * 400e-6f64).exp();
        assert!((c0.dot(&ones) - expected).abs() < 1e-12);
        for alpha in [-0.3, 0.3] {
            let c = volume_output_direct(&grid, &geo, alpha);
            let want = 1.0 - (-(1.0 + alpha) * (0.7224 + 10.8f64)).exp();
            assert!((c.dot(&ones) - want).abs() < 1e-12);
        }
        assert_eq!(peak_output(&grid).dot(&ones), 1.0);
    }

    #[test]
    fn source_energy_equals_absorbed_power() {
        let (geo, grid) = setup();
        let volumes = DVector::from_vec(grid.cell_volumes());
        let b = source_direct(&grid, &geo, 0.0);
        let watts = b.component_mul(&volumes).sum() * geo.materials.volumetric_heat_capacity();
        let expected = 1.0 - (-(0.7224 + 10.8f64)).exp();
        assert!((watts - expected).abs() < 1e-12);
    }
}
