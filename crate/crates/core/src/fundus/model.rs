use nalgebra::{DMatrix, DVector};

use super::diffusion::{assemble_diffusion, DiffusionOperator};
use super::geometry::FundusGeometry;
use super::grid::{build_grid, AxiGrid, GridSpec};
use super::taylor;
use crate::error::Result;
use crate::linalg::{taylor_derivative, taylor_sum};

/// Spatially discretised fundus model `ẋ = A x + b(α) u`, `y = C(α) x`,
/// with `b` and `C` stored as Taylor coefficients in α.
#[derive(Debug, Clone)]
pub struct FullOrderModel {
    pub geometry: FundusGeometry,
    pub grid: AxiGrid,
    pub operator: DiffusionOperator,
    b_taylor: Vec<DVector<f64>>,
    c_volume: Vec<DVector<f64>>,
    c_peak: DVector<f64>,
}

impl FullOrderModel {
    pub fn assemble(
        geometry: &FundusGeometry,
        grid_spec: &GridSpec,
        input_order: usize,
        output_order: usize,
    ) -> Result<Self> {
        let grid = build_grid(geometry, grid_spec)?;
        let operator = assemble_diffusion(&grid, &geometry.materials);
        let b_taylor = taylor::source_taylor(&grid, geometry, input_order);
        let c_volume = taylor::volume_output_taylor(&grid, geometry, output_order);
        let c_peak = taylor::peak_output(&grid);
        Ok(Self {
            geometry: geometry.clone(),
            grid,
            operator,
            b_taylor,
            c_volume,
            c_peak,
        })
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// Input expansion order k_B.
    pub fn input_order(&self) -> usize {
        self.b_taylor.len() - 1
    }

    /// Output expansion order k_C.
    pub fn output_order(&self) -> usize {
        self.c_volume.len() - 1
    }

    pub fn b_taylor(&self) -> &[DVector<f64>] {
        &self.b_taylor
    }

    pub fn volume_taylor(&self) -> &[DVector<f64>] {
        &self.c_volume
    }

    pub fn peak_row(&self) -> &DVector<f64> {
        &self.c_peak
    }

    /// `c_i` as a 2×n block: volume row on top, peak row below (zero for i ≥ 1).
    pub fn c_taylor(&self, i: usize) -> DMatrix<f64> {
        let n = self.dim();
        let mut c = DMatrix::zeros(2, n);
        c.set_row(0, &self.c_volume[i].transpose());
        if i == 0 {
            c.set_row(1, &self.c_peak.transpose());
        }
        c
    }

    pub fn b(&self, alpha: f64) -> DVector<f64> {
        taylor_sum(&self.b_taylor, alpha)
    }

    pub fn db(&self, alpha: f64) -> DVector<f64> {
        taylor_derivative(&self.b_taylor, alpha)
    }

    pub fn c_volume(&self, alpha: f64) -> DVector<f64> {
        taylor_sum(&self.c_volume, alpha)
    }

    /// Both outputs `(y_vol, y_peak)` of state `x` at parameter α.
    pub fn outputs(&self, x: &DVector<f64>, alpha: f64) -> (f64, f64) {
        (self.c_volume(alpha).dot(x), self.c_peak.dot(x))
    }

    /// Steady state `−A⁻¹ b(α) u` for a constant input.
    pub fn steady_state(&self, alpha: f64, power: f64) -> Result<DVector<f64>> {
        // −A⁻¹ b = (−G)⁻¹ D b
        let solver = self.operator.factor_pencil(0.0, 1.0)?;
        let rhs = self.b(alpha).component_mul(self.operator.volumes()) * power;
        Ok(solver.solve(&rhs))
    }
}
