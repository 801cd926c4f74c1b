//! Square-root balanced truncation on a rational Krylov subspace.
//!
//! The operator is self-adjoint in the `D` inner product, so one basis built
//! from `(σD − G)⁻¹ D B̃` and `(σD − G)⁻¹ C̃ᵀ` captures both the reachable and
//! the observable directions. Galerkin projection onto its `D`-orthonormal
//! version gives a symmetric intermediate model whose Gramians are computed in
//! modal coordinates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::irka::log_spaced;
use crate::error::{Error, Result};
use crate::fundus::DiffusionOperator;
use crate::linalg;

#[derive(Debug, Clone, Copy)]
pub struct BalancedOptions {
    pub shift_count: usize,
    pub first_shift: f64,
    pub last_shift: f64,
    /// Relative threshold for dropping directions of the Krylov basis.
    pub rank_tol: f64,
}

impl Default for BalancedOptions {
    fn default() -> Self {
        Self {
            shift_count: 16,
            first_shift: 1.0,
            last_shift: 1e5,
            rank_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BalancedResult {
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub hankel_singular_values: Vec<f64>,
    pub intermediate_dim: usize,
}

pub fn balanced_truncation(
    op: &DiffusionOperator,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    order: usize,
    opts: &BalancedOptions,
) -> Result<BalancedResult> {
    let d = op.volumes();
    let db = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| d[i] * b[(i, j)]);
    let ct = c.transpose();
    let mut shifts = vec![0.0];
    shifts.extend(log_spaced(opts.first_shift, opts.last_shift, opts.shift_count));
    let mut blocks = Vec::new();
    for s in shifts {
        let solver = op.factor_pencil(s, 1.0)?;
        blocks.push(solver.solve_block(&db));
        blocks.push(solver.solve_block(&ct));
    }
    let cols: usize = blocks.iter().map(|m| m.ncols()).sum();
    let mut k = DMatrix::zeros(op.dim(), cols);
    let mut at = 0;
    for blk in &blocks {
        k.columns_mut(at, blk.ncols()).copy_from(blk);
        at += blk.ncols();
    }
    let vm = d_orthonormal(&k, d, opts.rank_tol)?;
    let m = vm.ncols();
    if m < order {
        return Err(Error::IllConditioned(m as f64));
    }

    let gv = linalg::spmm(op.conductance(), &vm);
    let mut am = vm.transpose() * gv;
    am = (&am + am.transpose()) * 0.5;
    let bm = vm.transpose() * &db;
    let cm = c * &vm;

    let eig = SymmetricEigen::new(am);
    let lambda = eig.eigenvalues.clone();
    if lambda.max() >= 0.0 {
        return Err(Error::NotHurwitz(lambda.max()));
    }
    let u = eig.eigenvectors;
    let bh = u.transpose() * bm;
    let ch = cm * &u;
    let p = modal_gramian(&lambda, &(&bh * bh.transpose()));
    let q = modal_gramian(&lambda, &(ch.transpose() * &ch));
    let lp = psd_sqrt(&p);
    let lq = psd_sqrt(&q);
    let svd = (lq.transpose() * &lp).svd(true, true);
    let (us, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let hsv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    if hsv.len() < order || !(hsv[order - 1] > 0.0) {
        return Err(Error::IllConditioned(hsv.get(order - 1).copied().unwrap_or(0.0)));
    }
    let mut tr = DMatrix::zeros(m, order);
    let mut tl = DMatrix::zeros(m, order);
    for (c_out, &i) in idx.iter().take(order).enumerate() {
        let s = svd.singular_values[i].sqrt();
        tr.set_column(c_out, &(&lp * vt.row(i).transpose() / s));
        tl.set_column(c_out, &(&lq * us.column(i) / s));
    }
    let vu = &vm * &u;
    let v = &vu * tr;
    let w = DMatrix::from_fn(vu.nrows(), vu.ncols(), |i, j| d[i] * vu[(i, j)]) * tl;
    Ok(BalancedResult {
        v,
        w,
        hankel_singular_values: hsv,
        intermediate_dim: m,
    })
}

/// Solution of `ΛX + XΛ + S = 0` for diagonal `Λ`.
fn modal_gramian(lambda: &DVector<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| s[(i, j)] / (-lambda[i] - lambda[j]))
}

/// `L` with `L Lᵀ = S` for a symmetric positive semidefinite `S` (negative
/// rounding eigenvalues are clipped).
fn psd_sqrt(s: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut l = eig.eigenvectors.clone();
    for (j, &v) in eig.eigenvalues.iter().enumerate() {
        let f = v.max(0.0).sqrt();
        l.column_mut(j).scale_mut(f);
    }
    l
}

/// `D`-orthonormal basis of the column span of `k`, dropping directions whose
/// Gram eigenvalue falls below `tol · λ_max`.
fn d_orthonormal(k: &DMatrix<f64>, d: &DVector<f64>, tol: f64) -> Result<DMatrix<f64>> {
    // Column scaling first; the raw blocks differ by many orders of magnitude.
    let mut ks = k.clone();
    for mut col in ks.column_iter_mut() {
        let nrm = col.iter().zip(d.iter()).map(|(x, w)| x * x * w).sum::<f64>().sqrt();
        if nrm > 0.0 {
            col /= nrm;
        }
    }
    // Two passes of eigen-based orthonormalisation for stability.
    let mut basis = ks;
    for _ in 0..2 {
        let dk = DMatrix::from_fn(basis.nrows(), basis.ncols(), |i, j| d[i] * basis[(i, j)]);
        let gram = basis.transpose() * dk;
        let eig = SymmetricEigen::new((&gram + gram.transpose()) * 0.5);
        let lmax = eig.eigenvalues.max();
        if !(lmax > 0.0) {
            return Err(Error::IllConditioned(0.0));
        }
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > tol * lmax)
            .collect();
        let mut t = DMatrix::zeros(gram.nrows(), keep.len());
        for (c, &i) in keep.iter().enumerate() {
            t.set_column(c, &(eig.eigenvectors.column(i) / eig.eigenvalues[i].sqrt()));
        }
        basis *= t;
    }
    Ok(basis)
}
