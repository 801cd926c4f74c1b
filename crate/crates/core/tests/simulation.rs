mod common;

use fundus_core::pmor::{discretize_zoh, reduce, ParamDomain, ReductionOptions};
use fundus_core::sim::{
    make_truth_full, make_truth_reduced, relative_l2, simulate_full, simulate_reduced, FullSimOptions, InputSignal,
    Integrator, NoiseSpec, SAMPLE_TIME,
};

fn heating(t_final: f64) -> InputSignal {
    InputSignal::constant(0.03, SAMPLE_TIME, InputSignal::steps_for(t_final, SAMPLE_TIME)).unwrap()
}

#[test]
fn zero_input_gives_zero_output() {
    let model = common::coarse_model();
    let input = InputSignal::constant(0.0, SAMPLE_TIME, 50).unwrap();
    let traj = simulate_full(&model, 0.2, &input, &FullSimOptions::default()).unwrap();
    assert!(traj.y_volume.iter().chain(&traj.y_peak).all(|y| *y == 0.0));
    let rom = reduce(&model, &ParamDomain::default(), &ReductionOptions::new(3)).unwrap();
    let dm = discretize_zoh(&rom, SAMPLE_TIME).unwrap();
    let red = simulate_reduced(&dm, 0.2, &input).unwrap();
    assert!(red.y_volume.iter().all(|y| *y == 0.0));
}

#[test]
fn peak_rises_monotonically_toward_steady_state() {
    let model = common::coarse_model();
    let traj = simulate_full(&model, 0.0, &heating(1.0), &FullSimOptions::default()).unwrap();
    let steady = model.peak_row().dot(&model.steady_state(0.0, 0.03).unwrap());
    for w in traj.y_peak.windows(2) {
        assert!(w[1] >= w[0] - 1e-12 * steady.abs(), "{} then {}", w[0], w[1]);
    }
    let last = *traj.y_peak.last().unwrap();
    assert!(last > 0.0 && last <= steady * (1.0 + 1e-9));
    println!("peak after 1 s {last} K, steady {steady} K");
}

#[test]
fn outputs_are_linear_in_the_input() {
    let model = common::coarse_model();
    let input = heating(0.2);
    let opts = FullSimOptions::default();
    let one = simulate_full(&model, -0.1, &input, &opts).unwrap();
    let three = simulate_full(&model, -0.1, &input.scaled(3.0).unwrap(), &opts).unwrap();
    for (a, b) in one.y_volume.iter().zip(&three.y_volume) {
        assert!((3.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-300));
    }
}

#[test]
fn halving_the_substep_barely_changes_outputs() {
    let model = common::default_model();
    let input = heating(0.3);
    for integrator in [Integrator::CrankNicolson, Integrator::ImplicitEuler] {
        let run = |substeps| {
            let opts = FullSimOptions { substeps, integrator, keep_states: false };
            simulate_full(&model, 0.3, &input, &opts).unwrap()
        };
        let (coarse, fine) = (run(10), run(20));
        let e = relative_l2(&coarse.y_volume, &fine.y_volume);
        println!("{integrator:?}: substep halving changes y_vol by {e:e}");
        assert!(e < 1e-3);
    }
}

#[test]
fn reduced_model_tracks_full_model() {
    let model = common::default_model();
    let rom = reduce(&model, &ParamDomain::default(), &ReductionOptions::new(3)).unwrap();
    let dm = discretize_zoh(&rom, SAMPLE_TIME).unwrap();
    let input = heating(1.0);
    for alpha in [-0.3, 0.0, 0.3] {
        let full = simulate_full(&model, alpha, &input, &FullSimOptions::default()).unwrap();
        let red = simulate_reduced(&dm, alpha, &input).unwrap();
        let e = relative_l2(&red.y_volume, &full.y_volume);
        println!("α={alpha}: volume error {e:e}");
        assert!(e < 2e-2);
    }
}

#[test]
fn truth_is_reproducible_from_the_seed() {
    let model = common::coarse_model();
    let rom = reduce(&model, &ParamDomain::default(), &ReductionOptions::new(3)).unwrap();
    let dm = discretize_zoh(&rom, SAMPLE_TIME).unwrap();
    let input = heating(0.2);
    let noise = NoiseSpec { variance: 1.0, seed: 42 };
    let a = make_truth_reduced(&dm, 0.1, &input, &noise).unwrap();
    let b = make_truth_reduced(&dm, 0.1, &input, &noise).unwrap();
    assert_eq!(a.y_meas, b.y_meas);
    let c = make_truth_reduced(&dm, 0.1, &input, &NoiseSpec { seed: 43, ..noise }).unwrap();
    assert_ne!(a.y_meas, c.y_meas);
    assert_eq!(a.y_volume, c.y_volume);

    let full = make_truth_full(&model, &rom, 0.1, &input, &noise, &FullSimOptions::default()).unwrap();
    assert_eq!(full.len(), a.len());
    assert_eq!(full.states[0].len(), 3);
    let eta_full: Vec<f64> = full.y_meas.iter().zip(&full.y_volume).map(|(m, y)| m - y).collect();
    let eta_red: Vec<f64> = a.y_meas.iter().zip(&a.y_volume).map(|(m, y)| m - y).collect();
    for (x, y) in eta_full.iter().zip(&eta_red) {
        assert!((x - y).abs() < 1e-9);
    }
}
