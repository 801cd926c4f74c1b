//! Deterministic simulation of the full and reduced models and synthetic
//! measurement generation.

pub mod metrics;
pub mod signal;
pub mod simulate;
pub mod trajectory;
pub mod truth;

pub use signal::{InputSignal, SAMPLE_TIME};
pub use simulate::{simulate_full, simulate_reduced, FullSimOptions, Integrator};
pub use trajectory::{relative_l2, Trajectory};
pub use truth::{make_truth_full, make_truth_reduced, NoiseSpec, TruthRecord, TruthSource, NOISE_GENERATOR};
