//! Control-volume discretisation of `κ (∂²/∂r² + (1/r)∂/∂r + ∂²/∂z²)`.
//!
//! The operator is stored as `A = D⁻¹ G`, where `D` holds the control-volume
//! sizes and `G` is the symmetric conductance matrix (face area over node
//! distance, scaled by the diffusivity κ = k/(ρC_p)). Dirichlet neighbours only
//! contribute to the diagonal of `G`. On the axis the cell is a disk, which
//! reproduces the `2 ∂²/∂r²` symmetry limit.

use std::f64::consts::PI;

use nalgebra::DVector;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use super::geometry::MaterialConstants;
use super::grid::AxiGrid;
use crate::error::Result;
use crate::linalg::{self, SpdSolver};

#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    conductance: CsrMatrix<f64>,
    volumes: DVector<f64>,
    matrix: CsrMatrix<f64>,
    diffusivity: f64,
}

pub fn assemble_diffusion(grid: &AxiGrid, materials: &MaterialConstants) -> DiffusionOperator {
    let kappa = materials.diffusivity();
    let r = grid.radial_nodes();
    let z = grid.axial_nodes();
    let n = grid.n_unknowns();
    let mut coo = CooMatrix::new(n, n);
    let mut diag = vec![0.0; n];

    for j in 1..grid.nz() {
        let (zl, zh) = grid.axial_cell(j);
        let height = zh - zl;
        for i in 0..grid.nr() {
            let me = grid.index(i, j).expect("interior node");
            // Outward radial face.
            let (_, r_face) = grid.radial_cell(i);
            let g = kappa * 2.0 * PI * r_face * height / (r[i + 1] - r[i]);
            diag[me] -= g;
            if let Some(other) = grid.index(i + 1, j) {
                coo.push(me, other, g);
                coo.push(other, me, g);
                diag[other] -= g;
            }
            // Deeper axial face.
            let g = kappa * grid.cell_area(i) / (z[j + 1] - z[j]);
            diag[me] -= g;
            if let Some(other) = grid.index(i, j + 1) {
                coo.push(me, other, g);
                coo.push(other, me, g);
                diag[other] -= g;
            }
            // Shallower face towards the Dirichlet surface.
            if j == 1 {
                diag[me] -= kappa * grid.cell_area(i) / (z[1] - z[0]);
            }
        }
    }
    for (i, d) in diag.iter().enumerate() {
        coo.push(i, i, *d);
    }
    let conductance = CsrMatrix::from(&coo);
    let volumes = DVector::from_vec(grid.cell_volumes());
    let mut matrix = conductance.clone();
    {
        let (offsets, _, values) = matrix.csr_data_mut();
        for row in 0..n {
            for v in &mut values[offsets[row]..offsets[row + 1]] {
                *v /= volumes[row];
            }
        }
    }
    DiffusionOperator {
        conductance,
        volumes,
        matrix,
        diffusivity: kappa,
    }
}

impl DiffusionOperator {
    pub fn dim(&self) -> usize {
        self.volumes.len()
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    /// Symmetric conductance matrix `G` (m³/s).
    pub fn conductance(&self) -> &CsrMatrix<f64> {
        &self.conductance
    }

    /// Control-volume sizes, the diagonal of `D` (m³).
    pub fn volumes(&self) -> &DVector<f64> {
        &self.volumes
    }

    /// The state matrix `A = D⁻¹ G` (1/s).
    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        linalg::spmv(&self.matrix, x)
    }

    /// `Aᵀ x = G D⁻¹ x`.
    pub fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        linalg::spmv(&self.conductance, &x.component_div(&self.volumes))
    }

    /// Factorisation of `mass·D − stiffness·G`, SPD for `mass > 0`, `stiffness ≥ 0`.
    pub fn factor_pencil(&self, mass: f64, stiffness: f64) -> Result<SpdSolver> {
        SpdSolver::new(&linalg::diag_plus(
            &self.volumes,
            mass,
            &self.conductance,
            -stiffness,
        ))
    }

    /// Smallest eigenvalue of `−A` by inverse iteration on the pencil `(−G, D)`.
    pub fn ground_eigenvalue(&self, tol: f64, max_iter: usize) -> Result<f64> {
        let solver = self.factor_pencil(0.0, 1.0)?;
        let mut v = DVector::from_element(self.dim(), 1.0);
        let mut lambda = f64::INFINITY;
        for _ in 0..max_iter {
            let w = solver.solve(&v.component_mul(&self.volumes));
            let gw = linalg::spmv(&self.conductance, &w);
            let num = -w.dot(&gw);
            let den = w.dot(&w.component_mul(&self.volumes));
            let next = num / den;
            v = &w / w.norm();
            if ((next - lambda) / next).abs() < tol {
                return Ok(next);
            }
            lambda = next;
        }
        Ok(lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundus::geometry::{FundusGeometry, Layer, LayerStack};
    use crate::fundus::grid::{build_grid, GridSpec, RadialSpacing};

    fn slab() -> FundusGeometry {
        FundusGeometry {
            layers: LayerStack::new(vec![Layer::new("slab", 400e-6, 0.0)]).unwrap(),
            outer_radius: 500e-6,
            peak_layer: "slab".into(),
            ..Default::default()
        }
    }

    fn uniform(nr: usize, nz: usize) -> GridSpec {
        GridSpec {
            radial_intervals: nr,
            radial: RadialSpacing::Uniform,
            layer_nodes: vec![nz + 1],
        }
    }

    #[test]
    fn sign_pattern_is_m_matrix() {
        let grid = build_grid(&FundusGeometry::default(), &GridSpec::default()).unwrap();
        let op = assemble_diffusion(&grid, &MaterialConstants::default());
        for (i, j, v) in op.matrix().triplet_iter() {
            if i == j {
                assert!(*v < 0.0);
            } else {
                assert!(*v >= 0.0);
            }
        }
    }

    #[test]
    fn volume_weighted_symmetry() {
        let grid = build_grid(&FundusGeometry::default(), &GridSpec::default()).unwrap();
        let op = assemble_diffusion(&grid, &MaterialConstants::default());
        // D·A − Aᵀ·D, entrywise.
        let at = op.matrix().transpose();
        let mut diff = 0.0f64;
        let mut scale = 0.0f64;
        for (i, j, v) in op.matrix().triplet_iter() {
            let lhs = op.volumes()[i] * v;
            let rhs = at.get_entry(i, j).map(|e| e.into_value()).unwrap_or(0.0) * op.volumes()[j];
            diff = diff.max((lhs - rhs).abs());
            scale = scale.max(lhs.abs());
        }
        assert!(diff / scale < 1e-12, "{}", diff / scale);
    }

    #[test]
    fn constant_field_decays_only_next_to_boundary() {
        let geo = slab();
        let grid = build_grid(&geo, &uniform(10, 10)).unwrap();
        let op = assemble_diffusion(&grid, &geo.materials);
        let ax = op.apply(&DVector::from_element(op.dim(), 1.0));
        for u in 0..op.dim() {
            let (i, j) = grid.node(u);
            let touches = i + 1 == grid.nr() || j == 1 || j + 1 == grid.nz();
            if touches {
                assert!(ax[u] < 0.0);
            } else {
                assert!(ax[u].abs() < 1e-9 * op.matrix().get_entry(u, u).unwrap().into_value().abs());
            }
        }
    }

    #[test]
    fn polynomial_laplacian_on_uniform_grid() {
        let geo = slab();
        let (ro, h) = (geo.outer_radius, geo.z_end() - geo.z_begin);
        for (nr, nz) in [(10, 10), (20, 20)] {
            let grid = build_grid(&geo, &uniform(nr, nz)).unwrap();
            let op = assemble_diffusion(&grid, &geo.materials);
            let kappa = geo.materials.diffusivity();
            let x = DVector::from_fn(op.dim(), |u, _| {
                let (i, j) = grid.node(u);
                let (r, z) = (grid.radial_nodes()[i], grid.axial_nodes()[j]);
                z * (h - z) * (ro * ro - r * r)
            });
            let ax = op.apply(&x);
            let mut worst = 0.0f64;
            for u in 0..op.dim() {
                let (i, j) = grid.node(u);
                let (r, z) = (grid.radial_nodes()[i], grid.axial_nodes()[j]);
                let exact = kappa * (-4.0 * z * (h - z) - 2.0 * (ro * ro - r * r));
                worst = worst.max(((ax[u] - exact) / exact).abs());
            }
            // Second-order stencil is exact on this quadratic-in-r, quadratic-in-z field.
            assert!(worst < 1e-8, "nr={nr}: {worst}");
        }
    }

    #[test]
    fn ground_eigenvalue_is_positive_and_below_diagonal_scale() {
        let geo = FundusGeometry::default();
        let grid = build_grid(&geo, &GridSpec::default()).unwrap();
        let op = assemble_diffusion(&grid, &geo.materials);
        let lam = op.ground_eigenvalue(1e-12, 500).unwrap();
        assert!(lam > 0.0);
    }
}
