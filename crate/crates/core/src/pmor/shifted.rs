//! Shifted solves `(σI − A)⁻¹` and `(σI − Aᵀ)⁻¹` for the diffusion operator.
//!
//! With `A = D⁻¹G` both reduce to the pencil `σD − G`. For real σ > 0 the
//! pencil is SPD and is factored directly. For complex σ the solve goes
//! through the real SPD normal matrix
//! `M = (σ̄D − G) D⁻¹ (σD − G) = |σ|²D − 2Re(σ)G + G D⁻¹ G`,
//! so `(σD − G)⁻¹ = M⁻¹ (σ̄D − G) D⁻¹`.

use nalgebra::{Complex, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};
use crate::fundus::DiffusionOperator;
use crate::linalg::{self, SpdSolver};

pub type CVector = DVector<Complex<f64>>;

enum Factor {
    Real(SpdSolver),
    Normal(SpdSolver),
}

pub struct ShiftedSolver<'a> {
    op: &'a DiffusionOperator,
    shift: Complex<f64>,
    factor: Factor,
}

impl<'a> ShiftedSolver<'a> {
    pub fn new(op: &'a DiffusionOperator, shift: Complex<f64>) -> Result<Self> {
        let factor = if shift.im == 0.0 {
            if shift.re < 0.0 {
                return Err(Error::Factorization(format!(
                    "real shift {} lies in the spectrum half-plane",
                    shift.re
                )));
            }
            Factor::Real(op.factor_pencil(shift.re, 1.0)?)
        } else {
            let g = op.conductance();
            let gdg: CsrMatrix<f64> = g * op.matrix();
            let mut coo = CooMatrix::new(op.dim(), op.dim());
            for (i, j, v) in gdg.triplet_iter() {
                coo.push(i, j, *v);
            }
            for (i, j, v) in g.triplet_iter() {
                coo.push(i, j, -2.0 * shift.re * v);
            }
            let mag2 = shift.norm_sqr();
            for (i, d) in op.volumes().iter().enumerate() {
                coo.push(i, i, mag2 * d);
            }
            Factor::Normal(SpdSolver::new(&CsrMatrix::from(&coo))?)
        };
        Ok(Self { op, shift, factor })
    }

    pub fn shift(&self) -> Complex<f64> {
        self.shift
    }

    /// Solves `(σD − G) x = y`.
    fn solve_pencil(&self, y: &CVector) -> CVector {
        let re = y.map(|c| c.re);
        let im = y.map(|c| c.im);
        match &self.factor {
            Factor::Real(s) => join(&s.solve(&re), &s.solve(&im)),
            Factor::Normal(s) => {
                // q = D⁻¹ y, then (σ̄D − G) q with σ̄ = a − ib.
                let d = self.op.volumes();
                let (qr, qi) = (re.component_div(d), im.component_div(d));
                let (a, b) = (self.shift.re, self.shift.im);
                let g = self.op.conductance();
                let gqr = linalg::spmv(g, &qr);
                let gqi = linalg::spmv(g, &qi);
                // (a − ib)(qr + i qi) D − G(qr + i qi)
                let zr = d.component_mul(&(&qr * a + &qi * b)) - gqr;
                let zi = d.component_mul(&(&qi * a - &qr * b)) - gqi;
                join(&s.solve(&zr), &s.solve(&zi))
            }
        }
    }

    /// `(σI − A)⁻¹ r = (σD − G)⁻¹ D r`.
    pub fn solve(&self, r: &CVector) -> CVector {
        let d = self.op.volumes();
        let dr = CVector::from_fn(r.len(), |i, _| r[i] * d[i]);
        self.solve_pencil(&dr)
    }

    /// `(σI − Aᵀ)⁻¹ r = D (σD − G)⁻¹ r`.
    pub fn solve_transpose(&self, r: &CVector) -> CVector {
        let d = self.op.volumes();
        let x = self.solve_pencil(r);
        CVector::from_fn(x.len(), |i, _| x[i] * d[i])
    }
}

fn join(re: &DVector<f64>, im: &DVector<f64>) -> CVector {
    CVector::from_fn(re.len(), |i, _| Complex::new(re[i], im[i]))
}

pub fn to_complex(v: &DVector<f64>) -> CVector {
    v.map(|x| Complex::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundus::{assemble_diffusion, build_grid, FundusGeometry, GridSpec, RadialSpacing};
    use nalgebra::DMatrix;

    fn small_op() -> DiffusionOperator {
        let geo = FundusGeometry::default();
        let spec = GridSpec {
            radial_intervals: 8,
            radial: RadialSpacing::Graded { spot_intervals: 2 },
            layer_nodes: vec![3, 3, 2, 3, 2],
        };
        assemble_diffusion(&build_grid(&geo, &spec).unwrap(), &geo.materials)
    }

    fn residual(a: &DMatrix<Complex<f64>>, s: Complex<f64>, x: &CVector, r: &CVector) -> f64 {
        let n = a.nrows();
        let m = DMatrix::<Complex<f64>>::identity(n, n) * s - a;
        (m * x - r).norm() / r.norm()
    }

    #[test]
    fn solves_match_dense_for_real_and_complex_shifts() {
        let op = small_op();
        let a = linalg::to_dense(op.matrix()).map(|v| Complex::new(v, 0.0));
        let at = a.transpose();
        let r = CVector::from_fn(op.dim(), |i, _| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos()));
        for s in [Complex::new(10.0, 0.0), Complex::new(300.0, 2000.0), Complex::new(5.0, -40.0)] {
            let solver = ShiftedSolver::new(&op, s).unwrap();
            assert!(residual(&a, s, &solver.solve(&r), &r) < 1e-8);
            assert!(residual(&at, s, &solver.solve_transpose(&r), &r) < 1e-8);
        }
    }

    #[test]
    fn rejects_negative_real_shift() {
        let op = small_op();
        assert!(ShiftedSolver::new(&op, Complex::new(-1.0, 0.0)).is_err());
    }
}
