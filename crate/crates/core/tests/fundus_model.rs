mod common;

use fundus_core::fundus::{assemble_diffusion, build_grid, FullOrderModel, FundusGeometry, GridSpec};
use fundus_core::sim::{simulate_full, FullSimOptions, InputSignal, SAMPLE_TIME};
use proptest::prelude::*;

use common::cylinder_ground_eigenvalue;

fn ground(geo: &FundusGeometry, spec: &GridSpec) -> f64 {
    let grid = build_grid(geo, spec).unwrap();
    let op = assemble_diffusion(&grid, &geo.materials);
    op.ground_eigenvalue(1e-13, 2000).unwrap() / op.diffusivity()
}

#[test]
fn bessel_zero_matches_tabulated_value() {
    assert!((common::bessel_j0_first_zero() - 2.404825557695773).abs() < 1e-12);
}

#[test]
fn ground_eigenvalue_converges_to_cylinder_value() {
    let geo = FundusGeometry::default();
    let exact = cylinder_ground_eigenvalue(geo.outer_radius, geo.layers.total_thickness());
    let levels = [GridSpec::default().coarsened().unwrap(), GridSpec::default(), GridSpec::default().refined(2)];
    let errs: Vec<f64> = levels.iter().map(|s| (ground(&geo, s) / exact - 1.0).abs()).collect();
    println!("ground eigenvalue relative errors {errs:?}");
    assert!(errs[1] < 1e-2);
    assert!(errs[2] < errs[1] && errs[1] < errs[0]);
}

fn peak_at(model: &FullOrderModel, t: f64) -> (f64, f64) {
    let input = InputSignal::constant(0.03, SAMPLE_TIME, InputSignal::steps_for(t, SAMPLE_TIME)).unwrap();
    let traj = simulate_full(model, 0.0, &input, &FullSimOptions::default()).unwrap();
    (*traj.y_peak.last().unwrap(), *traj.y_volume.last().unwrap())
}

#[test]
fn peak_output_is_grid_converged() {
    let geo = FundusGeometry::default();
    let fine = FullOrderModel::assemble(&geo, &GridSpec::default().refined(2), 8, 8).unwrap();
    let base = common::default_model();
    let (pf, vf) = peak_at(&fine, 0.2);
    let (pb, vb) = peak_at(&base, 0.2);
    println!("peak {pb} -> {pf}, volume {vb} -> {vf}");
    assert!((pb / pf - 1.0).abs() < 1e-2);
    assert!((vb / vf - 1.0).abs() < 1e-2);
}

#[test]
fn doubling_outer_radius_barely_changes_outputs() {
    let geo = FundusGeometry::default();
    let mut wide = geo.clone();
    wide.outer_radius *= 2.0;
    let mut spec = GridSpec::default();
    spec.radial_intervals += 8;
    let base = common::default_model();
    let big = FullOrderModel::assemble(&wide, &spec, 8, 8).unwrap();
    let (pb, vb) = peak_at(&base, 0.5);
    let (pw, vw) = peak_at(&big, 0.5);
    println!("R_out doubled: peak {pb} -> {pw}, volume {vb} -> {vw}");
    assert!((pw / pb - 1.0).abs() < 5e-3);
    assert!((vw / vb - 1.0).abs() < 5e-3);
}

#[test]
fn temperatures_stay_nonnegative_under_heating() {
    let model = common::coarse_model();
    let input = InputSignal::new(SAMPLE_TIME, (0..60).map(|k| if k % 20 < 10 { 0.03 } else { 0.0 }).collect()).unwrap();
    let opts = FullSimOptions { keep_states: true, ..FullSimOptions::default() };
    let traj = simulate_full(&model, 0.4, &input, &opts).unwrap();
    for x in traj.states.unwrap() {
        let floor = -f64::EPSILON * x.norm() * 10.0;
        assert!(x.min() >= floor, "{} < {floor}", x.min());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn operator_is_self_adjoint_in_volume_metric(spot in 1usize..4, radial in 10usize..16, retina in 2usize..5) {
        let geo = FundusGeometry::default();
        let spec = GridSpec {
            radial_intervals: radial,
            radial: fundus_core::fundus::RadialSpacing::Graded { spot_intervals: spot },
            layer_nodes: vec![retina, 3, 2, 3, 2],
        };
        let grid = build_grid(&geo, &spec).unwrap();
        let op = assemble_diffusion(&grid, &geo.materials);
        let a = fundus_core::linalg::to_dense(op.matrix());
        let d = nalgebra::DMatrix::from_diagonal(op.volumes());
        let wa = &d * &a;
        let asym = (&wa - wa.transpose()).amax() / wa.amax();
        prop_assert!(asym < 1e-12);
        let eig = nalgebra::SymmetricEigen::new((&wa + wa.transpose()) * 0.5);
        prop_assert!(eig.eigenvalues.max() < 0.0);
    }

    #[test]
    fn taylor_truncation_error_shrinks_with_order(alpha in -0.5f64..0.5) {
        let geo = FundusGeometry::default();
        let grid = build_grid(&geo, &GridSpec::default().coarsened().unwrap()).unwrap();
        let direct = fundus_core::fundus::taylor::source_direct(&grid, &geo, alpha);
        let mut last = f64::INFINITY;
        for k in [2usize, 4, 8] {
            let coeffs = fundus_core::fundus::taylor::source_taylor(&grid, &geo, k);
            let err = (fundus_core::linalg::taylor_sum(&coeffs, alpha) - &direct).norm() / direct.norm();
            // Remainder bound of the alternating exponential series.
            let bound = 20f64.powi(k as i32 + 1) * alpha.abs().powi(k as i32 + 1) / (1..=k as i32 + 1).product::<i32>() as f64;
            prop_assert!(err <= bound.max(1e-12) * 10.0, "k={k} err={err} bound={bound}");
            prop_assert!(err <= last * 1.0001 || err < 1e-12);
            last = err;
        }
    }
}
