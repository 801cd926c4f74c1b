use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::augmented::build_augmented_system;
use super::balanced::{balanced_truncation, BalancedOptions};
use super::irka::{irka, project, IrkaOptions};
use super::moments::ParamDomain;
use crate::error::{Error, Result};
use crate::fundus::FullOrderModel;
use crate::linalg::{self, taylor_derivative, taylor_sum};

/// Largest accepted condition number of `WᵀV` for orthonormal `V`, `W`.
pub const MAX_PROJECTION_CONDITION: f64 = 1e6;

/// Reduced states are expressed in units of `1/STATE_SCALE` kelvin: every column
/// of `V` has a largest entry of `STATE_SCALE`.
pub const STATE_SCALE: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Irka,
    BalancedTruncation,
}

#[derive(Debug, Clone)]
pub struct ReductionOptions {
    pub order: usize,
    pub algorithm: Algorithm,
    /// Switch to balanced truncation when IRKA fails to converge or yields an unstable model.
    pub fallback: bool,
    /// Reduce `(A, A⁻¹B̃, C̃)`, whose impulse response is the step response minus
    /// its final value, instead of `(A, B̃, C̃)`.
    pub step_weighted: bool,
    /// Spend one state on `A⁻¹b₀` in `V` and `A⁻ᵀc_vol,0ᵀ` in `W` so that the
    /// volume-output DC gain at α = 0 is reproduced exactly.
    pub match_dc: bool,
    pub irka: IrkaOptions,
    pub balanced: BalancedOptions,
}

impl ReductionOptions {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            algorithm: Algorithm::Irka,
            fallback: true,
            step_weighted: true,
            match_dc: true,
            irka: IrkaOptions::default(),
            balanced: BalancedOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionInfo {
    pub algorithm: Algorithm,
    pub iterations: usize,
    /// Final interpolation points `(re, im)` for IRKA, empty otherwise.
    pub shifts: Vec<(f64, f64)>,
    /// Retained and leading discarded Hankel singular values for balanced truncation.
    pub hankel_singular_values: Vec<f64>,
    pub projection_condition: f64,
    pub step_weighted: bool,
    pub dc_matched: bool,
    pub input_rank: usize,
    pub output_rank: usize,
}

/// `ẋ_r = A_r x_r + b_r(α) u`, `y = C_r(α) x_r` with `x ≈ V x_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub a: DMatrix<f64>,
    pub b: Vec<DVector<f64>>,
    pub c_volume: Vec<DVector<f64>>,
    pub c_peak: DVector<f64>,
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub domain: ParamDomain,
    pub info: ReductionInfo,
}

impl ReducedModel {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_order(&self) -> usize {
        self.b.len() - 1
    }

    pub fn output_order(&self) -> usize {
        self.c_volume.len() - 1
    }

    pub fn b_at(&self, alpha: f64) -> DVector<f64> {
        taylor_sum(&self.b, alpha)
    }

    pub fn c_volume_at(&self, alpha: f64) -> DVector<f64> {
        taylor_sum(&self.c_volume, alpha)
    }

    /// `C_{r,i}` as a 2×n block: volume row, then peak row (zero for i ≥ 1).
    pub fn c_taylor(&self, i: usize) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(2, self.order());
        c.set_row(0, &self.c_volume[i].transpose());
        if i == 0 {
            c.set_row(1, &self.c_peak.transpose());
        }
        c
    }

    /// Lifts a reduced state back to the full grid.
    pub fn lift(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.v * x
    }

    pub fn validate(&self) -> Result<()> {
        let abscissa = linalg::spectral_abscissa(&self.a);
        if !(abscissa < 0.0) {
            return Err(Error::NotHurwitz(abscissa));
        }
        Ok(())
    }
}

/// Reduces `model` to order `opts.order` over `domain`. With `order == dim` the
/// bases are identities and the reduced model equals the full one.
pub fn reduce(model: &FullOrderModel, domain: &ParamDomain, opts: &ReductionOptions) -> Result<ReducedModel> {
    let n = opts.order;
    if n == 0 || n > model.dim() {
        return Err(Error::Config(format!(
            "reduced order {n} must lie in 1..={}",
            model.dim()
        )));
    }
    let aug = build_augmented_system(model, domain)?;
    let mut info = ReductionInfo {
        algorithm: opts.algorithm,
        iterations: 0,
        shifts: Vec::new(),
        hankel_singular_values: Vec::new(),
        projection_condition: 1.0,
        step_weighted: opts.step_weighted,
        dc_matched: opts.match_dc,
        input_rank: aug.input_rank,
        output_rank: aug.output_rank,
    };
    if n == model.dim() {
        info.step_weighted = false;
        info.dc_matched = false;
        let eye = DMatrix::identity(n, n);
        return assemble(model, domain, eye.clone(), eye, info);
    }

    let op = &model.operator;
    let d = op.volumes();
    // A⁻¹ = G⁻¹D and A⁻ᵀ = DG⁻¹; the factored pencil is −G.
    let neg_g = op.factor_pencil(0.0, 1.0)?;
    let b_in = if opts.step_weighted {
        -neg_g.solve_block(&scale_rows(&aug.b, d))
    } else {
        aug.b.clone()
    };
    let k = if opts.match_dc { n - 1 } else { n };

    let (mut v, mut w) = if k == 0 {
        (DMatrix::zeros(model.dim(), 0), DMatrix::zeros(model.dim(), 0))
    } else {
        krylov_bases(model, &b_in, &aug.c, k, opts, &mut info)?
    };
    if opts.match_dc {
        let dc_right = -neg_g.solve(&model.b_taylor()[0].component_mul(d));
        let dc_left = -neg_g.solve(&model.volume_taylor()[0]).component_mul(d);
        v = append_column(&v, &dc_right);
        w = append_column(&w, &dc_left);
    }

    let vo = linalg::orthonormalize(&v);
    let wo = linalg::orthonormalize(&w);
    let cond = linalg::condition_number(&(wo.transpose() * &vo));
    info.projection_condition = cond;
    if !(cond < MAX_PROJECTION_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let (v, w) = normalize_bases(&vo, &wo)?;
    let rom = assemble(model, domain, v, w, info)?;
    rom.validate()?;
    Ok(rom)
}

fn krylov_bases(
    model: &FullOrderModel,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    k: usize,
    opts: &ReductionOptions,
    info: &mut ReductionInfo,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let op = &model.operator;
    let bt = |info: &mut ReductionInfo| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let res = balanced_truncation(op, b, c, k, &opts.balanced)?;
        info.algorithm = Algorithm::BalancedTruncation;
        info.iterations = 0;
        info.shifts.clear();
        info.hankel_singular_values = res.hankel_singular_values.iter().take(k + 3).copied().collect();
        Ok((res.v, res.w))
    };
    match opts.algorithm {
        Algorithm::BalancedTruncation => bt(info),
        Algorithm::Irka => match irka(op, b, c, k, &opts.irka) {
            Ok(res) => {
                let (ar, _, _) = project(op, b, c, &res.v, &res.w)?;
                let abscissa = linalg::spectral_abscissa(&ar);
                if abscissa < 0.0 {
                    info!("IRKA converged in {} iterations", res.iterations);
                    info.iterations = res.iterations;
                    info.shifts = res.shifts.iter().map(|s| (s.re, s.im)).collect();
                    Ok((res.v, res.w))
                } else if opts.fallback {
                    warn!("IRKA produced an unstable model; falling back to balanced truncation");
                    bt(info)
                } else {
                    Err(Error::NotHurwitz(abscissa))
                }
            }
            Err(e) if opts.fallback => {
                warn!("{e}; falling back to balanced truncation");
                bt(info)
            }
            Err(e) => Err(e),
        },
    }
}

fn scale_rows(m: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)])
}

fn append_column(m: &DMatrix<f64>, c: &DVector<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(c.len(), m.ncols() + 1);
    out.columns_mut(0, m.ncols()).copy_from(m);
    out.set_column(m.ncols(), c);
    out
}

/// Rescales `V` to the reduced state units and picks `W` with `WᵀV = I`.
fn normalize_bases(v: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut v = v.clone();
    for mut col in v.column_iter_mut() {
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
        let f = STATE_SCALE / col[imax];
        col *= f;
    }
    let e = w.transpose() * &v;
    let einv_t = e
        .try_inverse()
        .ok_or(Error::IllConditioned(f64::INFINITY))?
        .transpose();
    Ok((v, w * einv_t))
}

fn assemble(
    model: &FullOrderModel,
    domain: &ParamDomain,
    v: DMatrix<f64>,
    w: DMatrix<f64>,
    info: ReductionInfo,
) -> Result<ReducedModel> {
    let op = &model.operator;
    let e = (w.transpose() * &v).lu();
    let solve = |m: DMatrix<f64>| e.solve(&m).ok_or(Error::IllConditioned(f64::INFINITY));
    let a = solve(w.transpose() * linalg::spmm(op.matrix(), &v))?;
    let b = model
        .b_taylor()
        .iter()
        .map(|bi| solve(w.transpose() * DMatrix::from_column_slice(bi.len(), 1, bi.as_slice())).map(|m| m.column(0).into_owned()))
        .collect::<Result<Vec<_>>>()?;
    let c_volume = model
        .volume_taylor()
        .iter()
        .map(|ci| v.transpose() * ci)
        .collect();
    let c_peak = v.transpose() * model.peak_row();
    Ok(ReducedModel {
        a,
        b,
        c_volume,
        c_peak,
        v,
        w,
        domain: *domain,
        info,
    })
}

/// `x_{k+1} = A_d x_k + b_d(α) u_k`, `y_k = c_d(α) x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub a: DMatrix<f64>,
    pub b: Vec<DVector<f64>>,
    pub c_volume: Vec<DVector<f64>>,
    pub c_peak: DVector<f64>,
    pub sample_time: f64,
    pub domain: ParamDomain,
}

impl DiscreteModel {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_order(&self) -> usize {
        self.b.len() - 1
    }

    pub fn output_order(&self) -> usize {
        self.c_volume.len() - 1
    }

    pub fn b_at(&self, alpha: f64) -> DVector<f64> {
        taylor_sum(&self.b, alpha)
    }

    pub fn db_at(&self, alpha: f64) -> DVector<f64> {
        taylor_derivative(&self.b, alpha)
    }

    pub fn c_volume_at(&self, alpha: f64) -> DVector<f64> {
        taylor_sum(&self.c_volume, alpha)
    }

    pub fn dc_volume_at(&self, alpha: f64) -> DVector<f64> {
        taylor_derivative(&self.c_volume, alpha)
    }

    pub fn step(&self, x: &DVector<f64>, alpha: f64, u: f64) -> DVector<f64> {
        &self.a * x + self.b_at(alpha) * u
    }

    pub fn outputs(&self, x: &DVector<f64>, alpha: f64) -> (f64, f64) {
        (self.c_volume_at(alpha).dot(x), self.c_peak.dot(x))
    }

    pub fn validate(&self) -> Result<()> {
        let rho = linalg::spectral_radius(&self.a);
        if !(rho < 1.0) {
            return Err(Error::Unstable(rho));
        }
        Ok(())
    }
}

/// Exact discretisation under piecewise-constant input:
/// `A_d = e^{A_r T_s}`, `b_{d,i} = A_r⁻¹ (A_d − I) b_{r,i}`.
pub fn discretize_zoh(rom: &ReducedModel, sample_time: f64) -> Result<DiscreteModel> {
    if !(sample_time > 0.0) {
        return Err(Error::Config(format!("sample time {sample_time} must be positive")));
    }
    rom.validate()?;
    let n = rom.order();
    let ad = (&rom.a * sample_time).exp();
    let lu = rom.a.clone().lu();
    let phi = &ad - DMatrix::<f64>::identity(n, n);
    let b = rom
        .b
        .iter()
        .map(|bi| {
            lu.solve(&(&phi * bi))
                .ok_or(Error::NotHurwitz(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let dm = DiscreteModel {
        a: ad,
        b,
        c_volume: rom.c_volume.clone(),
        c_peak: rom.c_peak.clone(),
        sample_time,
        domain: rom.domain,
    };
    dm.validate()?;
    Ok(dm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundus::{FundusGeometry, GridSpec, RadialSpacing};

    fn tiny_model() -> FullOrderModel {
        let spec = GridSpec {
            radial_intervals: 8,
            radial: RadialSpacing::Graded { spot_intervals: 2 },
            layer_nodes: vec![3, 3, 2, 3, 2],
        };
        FullOrderModel::assemble(&FundusGeometry::default(), &spec, 3, 3).unwrap()
    }

    fn rom_of(a: DMatrix<f64>, b: DVector<f64>) -> ReducedModel {
        let n = a.nrows();
        ReducedModel {
            c_volume: vec![DVector::from_element(n, 1.0)],
            c_peak: DVector::from_element(n, 1.0),
            v: DMatrix::identity(n, n),
            w: DMatrix::identity(n, n),
            a,
            b: vec![b],
            domain: ParamDomain::default(),
            info: ReductionInfo {
                algorithm: Algorithm::Irka,
                iterations: 0,
                shifts: vec![],
                hankel_singular_values: vec![],
                projection_condition: 1.0,
                step_weighted: false,
                dc_matched: false,
                input_rank: 1,
                output_rank: 1,
            },
        }
    }

    #[test]
    fn scalar_zoh() {
        let rom = rom_of(DMatrix::from_element(1, 1, -1.0), DVector::from_element(1, 2.0));
        let d = discretize_zoh(&rom, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((d.a[(0, 0)] - e).abs() < 1e-15);
        assert!((d.b[0][0] - 2.0 * (1.0 - e)).abs() < 1e-15);
    }

    #[test]
    fn diagonal_zoh() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        let d = discretize_zoh(&rom_of(a, DVector::from_element(2, 1.0)), 0.004).unwrap();
        assert!((d.a[(0, 0)] - (-0.004f64).exp()).abs() < 1e-15);
        assert!((d.a[(1, 1)] - (-0.008f64).exp()).abs() < 1e-15);
        assert_eq!(d.a[(0, 1)], 0.0);
    }

    #[test]
    fn rejects_unstable_reduced_matrix() {
        let rom = rom_of(DMatrix::from_element(1, 1, 0.5), DVector::from_element(1, 1.0));
        assert!(matches!(discretize_zoh(&rom, 0.004), Err(Error::NotHurwitz(_))));
    }

    #[test]
    fn identity_reduction_reproduces_full_model() {
        let model = tiny_model();
        let rom = reduce(&model, &ParamDomain::default(), &ReductionOptions::new(model.dim())).unwrap();
        let dense = linalg::to_dense(model.operator.matrix());
        assert!((&rom.a - &dense).amax() <= 1e-12 * dense.amax());
        for (br, bf) in rom.b.iter().zip(model.b_taylor()) {
            assert!((br - bf).amax() <= 1e-12 * bf.amax());
        }
    }

    #[test]
    fn projection_identities_hold() {
        let model = tiny_model();
        for algorithm in [Algorithm::Irka, Algorithm::BalancedTruncation] {
            let opts = ReductionOptions {
                algorithm,
                fallback: false,
                ..ReductionOptions::new(3)
            };
            let rom = reduce(&model, &ParamDomain::default(), &opts).unwrap();
            let winv = (rom.w.transpose() * &rom.v).try_inverse().unwrap();
            let av = linalg::spmm(model.operator.matrix(), &rom.v);
            let ar = &winv * rom.w.transpose() * av;
            assert!((&ar - &rom.a).amax() <= 1e-10 * rom.a.amax());
            for (i, bi) in model.b_taylor().iter().enumerate() {
                let want = &winv * rom.w.transpose() * bi;
                assert!((&want - &rom.b[i]).amax() <= 1e-10 * want.amax().max(1e-300));
            }
            for i in 0..=model.output_order() {
                let want = model.c_taylor(i) * &rom.v;
                assert!((want - rom.c_taylor(i)).amax() <= 1e-10 * rom.c_taylor(0).amax());
            }
            assert!(rom.info.projection_condition < MAX_PROJECTION_CONDITION);
            let d = discretize_zoh(&rom, 1.0 / 250.0).unwrap();
            for (i, bi) in rom.b.iter().enumerate() {
                let want = rom.a.clone().lu().solve(&((&d.a - DMatrix::identity(3, 3)) * bi)).unwrap();
                assert!((&want - &d.b[i]).amax() <= 1e-10 * want.amax().max(1e-300));
            }
        }
    }
}
