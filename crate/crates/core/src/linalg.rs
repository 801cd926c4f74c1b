//! Small numerical helpers shared by the model, reduction and estimation code.

use nalgebra::{Complex, DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};

use crate::error::{Error, Result};

/// Evaluates `Σ αⁱ vᵢ` for a list of Taylor coefficient vectors.
pub fn taylor_sum(coeffs: &[DVector<f64>], alpha: f64) -> DVector<f64> {
    let mut out = DVector::zeros(coeffs.first().map_or(0, |c| c.len()));
    let mut power = 1.0;
    for c in coeffs {
        out.axpy(power, c, 1.0);
        power *= alpha;
    }
    out
}

/// Evaluates `Σ i αⁱ⁻¹ vᵢ`, the α-derivative of [`taylor_sum`].
pub fn taylor_derivative(coeffs: &[DVector<f64>], alpha: f64) -> DVector<f64> {
    let mut out = DVector::zeros(coeffs.first().map_or(0, |c| c.len()));
    let mut power = 1.0;
    for (i, c) in coeffs.iter().enumerate().skip(1) {
        out.axpy(i as f64 * power, c, 1.0);
        power *= alpha;
    }
    out
}

/// `y = M x` for a CSR matrix.
pub fn spmv(m: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(m.nrows());
    for (row, lane) in m.row_iter().enumerate() {
        let mut acc = 0.0;
        for (&col, &v) in lane.col_indices().iter().zip(lane.values()) {
            acc += v * x[col];
        }
        y[row] = acc;
    }
    y
}

/// `Y = M X` for a CSR matrix and a dense block.
pub fn spmm(m: &CsrMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(m.nrows(), x.ncols());
    for c in 0..x.ncols() {
        let col = spmv(m, &x.column(c).into_owned());
        y.set_column(c, &col);
    }
    y
}

/// Converts a CSR matrix to dense storage (tests and small systems only).
pub fn to_dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.triplet_iter() {
        d[(i, j)] += *v;
    }
    d
}

/// Sparse Cholesky wrapper for symmetric positive definite systems.
pub struct SpdSolver {
    factor: CscCholesky<f64>,
    n: usize,
}

impl SpdSolver {
    pub fn new(m: &CsrMatrix<f64>) -> Result<Self> {
        let csc = CscMatrix::from(m);
        let factor = CscCholesky::factor(&csc)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self {
            factor,
            n: m.nrows(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = DMatrix::from_column_slice(self.n, 1, b.as_slice());
        self.factor.solve_mut(&mut x);
        DVector::from_column_slice(x.as_slice())
    }

    pub fn solve_block(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.factor.solve(b)
    }
}

/// Builds `a·diag(d) + b·M` for a CSR matrix `M` whose pattern includes the diagonal.
pub fn diag_plus(d: &DVector<f64>, a: f64, m: &CsrMatrix<f64>, b: f64) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for (i, j, v) in m.triplet_iter() {
        coo.push(i, j, b * v);
    }
    for i in 0..m.nrows() {
        coo.push(i, i, a * d[i]);
    }
    CsrMatrix::from(&coo)
}

/// Dense eigenvalues of a real square matrix as complex numbers.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    m.complex_eigenvalues().iter().copied().collect()
}

pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m)
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// 2-norm condition number via singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Orthonormal basis of the column span via thin QR.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}

/// Right null vector of a (nearly) singular complex matrix, normalised to unit length
/// with its largest entry real and positive.
pub fn null_vector(m: &DMatrix<Complex<f64>>) -> DVector<Complex<f64>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let mut v: DVector<Complex<f64>> = v_t.row(k).transpose().map(|c| c.conj());
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, c)| if c.norm() > acc.1 { (i, c.norm()) } else { acc });
    let phase = v[imax] / Complex::new(v[imax].norm(), 0.0);
    v /= phase;
    let norm = v.norm();
    v / Complex::new(norm, 0.0)
}

/// Gauss–Legendre nodes and weights on `[a, b]` (Newton iteration on Pₙ).
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    assert!(n > 0, "rule needs at least one node");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w));
    }
    out.sort_by(|l, r| l.0.total_cmp(&r.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(5, -0.5, 0.5);
        let w: f64 = rule.iter().map(|p| p.1).sum();
        assert!((w - 1.0).abs() < 1e-14);
        let m8: f64 = rule.iter().map(|&(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 2.0 * 0.5f64.powi(9) / 9.0).abs() < 1e-15);
    }

    #[test]
    fn taylor_helpers_match_polynomial() {
        let c: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&v| DVector::from_element(2, v))
            .collect();
        assert!((taylor_sum(&c, 0.5)[0] - (1.0 + 1.0 + 0.75)).abs() < 1e-15);
        assert!((taylor_derivative(&c, 0.5)[1] - (2.0 + 3.0)).abs() < 1e-15);
    }

    #[test]
    fn null_vector_of_rank_deficient_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]).map(|v| Complex::new(v, 0.0));
        let v = null_vector(&m);
        assert!((&m * &v).norm() < 1e-12);
        assert!(v[0].im.abs() < 1e-14 && v[1].im.abs() < 1e-14);
    }
}
