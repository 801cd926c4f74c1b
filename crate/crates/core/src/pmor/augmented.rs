//! Parameter-independent MIMO surrogate of the parametric transfer function.
//!
//! Stacking the Taylor coefficients and weighting them with a factor of the
//! moment matrix turns the L²(𝒟)⊗H₂ norm of the parametric system into the
//! ordinary H₂ norm of `(A, B̃, C̃)`. Input and output moments are applied
//! independently, so the identity holds for the norm that integrates the
//! input parameter and the output parameter over 𝒟 separately; when `C` does
//! not depend on α (k_C = 0) this is exactly `∫_𝒟 ‖H(·, α)‖²_{H₂} dα`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::moments::{moment_factor, moment_matrix, ParamDomain};
use crate::error::Result;
use crate::fundus::{DiffusionOperator, FullOrderModel};

#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    /// `B̃ = [b_0 … b_{k_B}] L_B`, n_f × (retained input moments).
    pub b: DMatrix<f64>,
    /// `C̃`: moment-weighted volume rows, then the α-independent peak row scaled by √|𝒟|.
    pub c: DMatrix<f64>,
    pub input_rank: usize,
    pub output_rank: usize,
}

pub fn build_augmented_system(model: &FullOrderModel, domain: &ParamDomain) -> Result<AugmentedSystem> {
    let n = model.dim();
    let bs = model.b_taylor();
    let raw_b = DMatrix::from_fn(n, bs.len(), |i, j| bs[j][i]);
    let lb = moment_factor(&moment_matrix(domain, bs.len() - 1))?;
    let b = raw_b * &lb;

    let cs = model.volume_taylor();
    let raw_c = DMatrix::from_fn(cs.len(), n, |i, j| cs[i][j]);
    let lc = moment_factor(&moment_matrix(domain, cs.len() - 1))?;
    let vol = lc.transpose() * raw_c;
    let mut c = DMatrix::zeros(vol.nrows() + 1, n);
    c.rows_mut(0, vol.nrows()).copy_from(&vol);
    c.set_row(vol.nrows(), &(model.peak_row().transpose() * domain.width().sqrt()));

    Ok(AugmentedSystem {
        input_rank: lb.ncols(),
        output_rank: lc.ncols(),
        b,
        c,
    })
}

/// Squared H₂ norm of `(D⁻¹G, B, C)` through the symmetric modal form of
/// `D^{-1/2} G D^{-1/2}`. Dense, intended for small test systems.
pub fn h2_norm_squared_dense(op: &DiffusionOperator, b: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
    let d = op.volumes();
    let sq = d.map(f64::sqrt);
    let g = crate::linalg::to_dense(op.conductance());
    let s = DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] / (sq[i] * sq[j]));
    let eig = SymmetricEigen::new(s);
    let u = &eig.eigenvectors;
    let bh = u.transpose() * DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * sq[i]);
    let ch = DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)] / sq[j]) * u;
    modal_h2_squared(&eig.eigenvalues, &bh, &ch)
}

/// `Σ_ij (ĈᵀĈ)_ij (B̂B̂ᵀ)_ij / (−λ_i − λ_j)` for a diagonal stable state matrix.
pub fn modal_h2_squared(lambda: &DVector<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
    let bb = b * b.transpose();
    let cc = c.transpose() * c;
    let mut total = 0.0;
    for i in 0..lambda.len() {
        for j in 0..lambda.len() {
            total += cc[(i, j)] * bb[(i, j)] / (-lambda[i] - lambda[j]);
        }
    }
    total
}

/// Squared H₂ norm of a small dense stable system via the Kronecker form of
/// the controllability Lyapunov equation.
pub fn h2_norm_squared_lyapunov(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Option<f64> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -(b * b.transpose());
    let vec = DVector::from_column_slice(rhs.as_slice());
    let sol = k.lu().solve(&vec)?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Some((c * p * c.transpose()).trace())
}
