//! Tangential two-sided IRKA for `(A, B̃, C̃)` with `A = D⁻¹G`.

use log::debug;
use nalgebra::{Complex, DMatrix, DVector};

use super::shifted::{to_complex, CVector, ShiftedSolver};
use crate::error::{Error, Result};
use crate::fundus::DiffusionOperator;
use crate::linalg;

#[derive(Debug, Clone, Copy)]
pub struct IrkaOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial shifts are log-spaced in `[first_shift, last_shift]`.
    pub first_shift: f64,
    pub last_shift: f64,
}

impl Default for IrkaOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 100,
            first_shift: 1.0,
            last_shift: 1e4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IrkaResult {
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub shifts: Vec<Complex<f64>>,
    pub iterations: usize,
}

struct Interpolation {
    shifts: Vec<Complex<f64>>,
    right: Vec<CVector>,
    left: Vec<CVector>,
}

pub fn irka(
    op: &DiffusionOperator,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    order: usize,
    opts: &IrkaOptions,
) -> Result<IrkaResult> {
    assert!(order >= 1);
    let (m, p) = (b.ncols(), c.nrows());
    let mut data = Interpolation {
        shifts: log_spaced(opts.first_shift, opts.last_shift, order)
            .into_iter()
            .map(|s| Complex::new(s, 0.0))
            .collect(),
        right: vec![to_complex(&DVector::from_element(m, 1.0 / (m as f64).sqrt())); order],
        left: vec![to_complex(&DVector::from_element(p, 1.0 / (p as f64).sqrt())); order],
    };
    let ct = c.transpose();
    for it in 1..=opts.max_iterations {
        let (v, w) = bases(op, b, &ct, &data)?;
        let next = update(op, b, c, &v, &w)?;
        let change = shift_change(&data.shifts, &next.shifts);
        debug!("irka iteration {it}: shift change {change:e}");
        data = next;
        if change < opts.tolerance {
            let (v, w) = bases(op, b, &ct, &data)?;
            return Ok(IrkaResult {
                v,
                w,
                shifts: data.shifts,
                iterations: it,
            });
        }
    }
    Err(Error::IrkaNotConverged {
        iterations: opts.max_iterations,
        shifts: data.shifts.iter().map(|s| (s.re, s.im)).collect(),
    })
}

pub fn log_spaced(first: f64, last: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![(first * last).sqrt()];
    }
    let (a, b) = (first.ln(), last.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Real orthonormal bases spanning the tangential rational Krylov directions.
/// A conjugate pair contributes the real and imaginary part of one member.
fn bases(
    op: &DiffusionOperator,
    b: &DMatrix<f64>,
    ct: &DMatrix<f64>,
    data: &Interpolation,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = op.dim();
    let r = data.shifts.len();
    let mut v = DMatrix::zeros(n, r);
    let mut w = DMatrix::zeros(n, r);
    let mut j = 0;
    while j < r {
        let s = data.shifts[j];
        let solver = ShiftedSolver::new(op, s)?;
        let vj = solver.solve(&apply_complex(b, &data.right[j]));
        let wj = solver.solve_transpose(&apply_complex(ct, &data.left[j]));
        if s.im == 0.0 {
            v.set_column(j, &vj.map(|z| z.re));
            w.set_column(j, &wj.map(|z| z.re));
            j += 1;
        } else {
            v.set_column(j, &vj.map(|z| z.re));
            w.set_column(j, &wj.map(|z| z.re));
            if j + 1 < r {
                v.set_column(j + 1, &vj.map(|z| z.im));
                w.set_column(j + 1, &wj.map(|z| z.im));
            }
            j += 2;
        }
    }
    Ok((linalg::orthonormalize(&v), linalg::orthonormalize(&w)))
}

fn apply_complex(m: &DMatrix<f64>, x: &CVector) -> CVector {
    let re = m * x.map(|z| z.re);
    let im = m * x.map(|z| z.im);
    CVector::from_fn(re.len(), |i, _| Complex::new(re[i], im[i]))
}

/// Petrov–Galerkin projection of `(A, B, C)` onto `(V, W)`.
pub fn project(
    op: &DiffusionOperator,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let av = linalg::spmm(op.matrix(), v);
    let e = w.transpose() * v;
    let lu = e.lu();
    let ar = lu
        .solve(&(w.transpose() * av))
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    let br = lu
        .solve(&(w.transpose() * b))
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    Ok((ar, br, c * v))
}

/// New shifts `−λ(A_r)` (reflected into the right half-plane) and tangential
/// directions from the eigenvectors of the projected system.
fn update(
    op: &DiffusionOperator,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<Interpolation> {
    let (ar, br, cr) = project(op, b, c, v, w)?;
    let r = ar.nrows();
    let lambdas = paired_eigenvalues(&ar);
    let arc = ar.map(|x| Complex::new(x, 0.0));
    let mut x = DMatrix::<Complex<f64>>::zeros(r, r);
    let mut j = 0;
    while j < r {
        let l = lambdas[j];
        let shifted = &arc - DMatrix::<Complex<f64>>::identity(r, r) * l;
        let xj = linalg::null_vector(&shifted);
        x.set_column(j, &xj);
        if l.im != 0.0 && j + 1 < r {
            x.set_column(j + 1, &xj.map(|z| z.conj()));
            j += 2;
        } else {
            j += 1;
        }
    }
    let xinv = x
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    let bhat = xinv * br.map(|z| Complex::new(z, 0.0));
    let chat = cr.map(|z| Complex::new(z, 0.0)) * x;
    Ok(Interpolation {
        shifts: lambdas.iter().map(|l| Complex::new(l.re.abs(), -l.im)).collect(),
        right: (0..r).map(|j| bhat.row(j).transpose()).collect(),
        left: (0..r).map(|j| chat.column(j).into_owned()).collect(),
    })
}

/// Eigenvalues ordered by real part with conjugate pairs adjacent
/// (positive imaginary part first); near-real values are snapped to the axis.
fn paired_eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut l: Vec<Complex<f64>> = linalg::eigenvalues(a)
        .into_iter()
        .map(|z| {
            if z.im.abs() <= 1e-10 * z.norm() {
                Complex::new(z.re, 0.0)
            } else {
                z
            }
        })
        .collect();
    l.sort_by(|x, y| {
        y.re.total_cmp(&x.re)
            .then_with(|| y.im.total_cmp(&x.im))
    });
    // Conjugates share the real part to rounding; enforce exact pairing.
    let mut j = 0;
    while j < l.len() {
        if l[j].im != 0.0 && j + 1 < l.len() {
            let re = 0.5 * (l[j].re + l[j + 1].re);
            let im = 0.5 * (l[j].im.abs() + l[j + 1].im.abs());
            l[j] = Complex::new(re, im);
            l[j + 1] = Complex::new(re, -im);
            j += 2;
        } else {
            j += 1;
        }
    }
    l
}

fn shift_change(old: &[Complex<f64>], new: &[Complex<f64>]) -> f64 {
    let key = |v: &[Complex<f64>]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.re.total_cmp(&b.re).then_with(|| a.im.total_cmp(&b.im)));
        s
    };
    key(old)
        .iter()
        .zip(key(new).iter())
        .map(|(a, b)| (a - b).norm() / b.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundus::{FullOrderModel, FundusGeometry, GridSpec};
    use crate::pmor::{build_augmented_system, ParamDomain};

    #[test]
    fn log_spacing_endpoints() {
        let s = log_spaced(1.0, 1e4, 3);
        assert!((s[0] - 1.0).abs() < 1e-12 && (s[1] - 100.0).abs() < 1e-9 && (s[2] - 1e4).abs() < 1e-8);
    }

    #[test]
    fn converged_shifts_are_mirror_images_of_reduced_poles() {
        let model = FullOrderModel::assemble(
            &FundusGeometry::default(),
            &GridSpec::default().coarsened().unwrap(),
            2,
            2,
        )
        .unwrap();
        let aug = build_augmented_system(&model, &ParamDomain::default()).unwrap();
        let res = irka(&model.operator, &aug.b, &aug.c, 3, &IrkaOptions::default()).unwrap();
        let (ar, _, _) = project(&model.operator, &aug.b, &aug.c, &res.v, &res.w).unwrap();
        let mut poles: Vec<f64> = linalg::eigenvalues(&ar).iter().map(|z| -z.re).collect();
        let mut shifts: Vec<f64> = res.shifts.iter().map(|z| z.re).collect();
        poles.sort_by(f64::total_cmp);
        shifts.sort_by(f64::total_cmp);
        for (p, s) in poles.iter().zip(&shifts) {
            assert!((p - s).abs() < 1e-4 * s, "{p} vs {s}");
        }
    }
}
