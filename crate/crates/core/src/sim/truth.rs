//! Synthetic truth: clean outputs of a chosen model plus seeded Gaussian
//! measurement noise on the volume channel.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::signal::InputSignal;
use super::simulate::{simulate_full, simulate_reduced, FullSimOptions};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::fundus::FullOrderModel;
use crate::pmor::{DiscreteModel, ReducedModel};

/// Generator identifier written to manifests.
pub const NOISE_GENERATOR: &str = "chacha20-rand_chacha-0.9/standard-normal-rand_distr-0.5";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    Full,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// σ² in K².
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(Error::Input(format!("noise variance {} must be nonnegative", self.variance)));
        }
        Ok(())
    }

    /// `n` i.i.d. draws of `N(0, σ²)`.
    pub fn draws(&self, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let sigma = self.variance.sqrt();
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        Ok((0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub alpha: f64,
    pub source: TruthSource,
    pub time: Vec<f64>,
    pub input: Vec<f64>,
    pub y_volume: Vec<f64>,
    pub y_peak: Vec<f64>,
    pub y_meas: Vec<f64>,
    /// Reduced-coordinate state at every sample.
    pub states: Vec<DVector<f64>>,
}

impl TruthRecord {
    fn from_trajectory(traj: Trajectory, states: Vec<DVector<f64>>, alpha: f64, source: TruthSource, noise: &NoiseSpec) -> Result<Self> {
        let eta = noise.draws(traj.len())?;
        let y_meas = traj.y_volume.iter().zip(&eta).map(|(y, e)| y + e).collect();
        Ok(Self {
            alpha,
            source,
            time: traj.time,
            input: traj.input,
            y_volume: traj.y_volume,
            y_peak: traj.y_peak,
            y_meas,
            states,
        })
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Same clean data with a fresh noise realisation.
    pub fn renoised(&self, noise: &NoiseSpec) -> Result<Self> {
        let eta = noise.draws(self.len())?;
        Ok(Self {
            y_meas: self.y_volume.iter().zip(&eta).map(|(y, e)| y + e).collect(),
            ..self.clone()
        })
    }
}

/// Truth generated by the discrete reduced model itself.
pub fn make_truth_reduced(dm: &DiscreteModel, alpha: f64, input: &InputSignal, noise: &NoiseSpec) -> Result<TruthRecord> {
    let mut traj = simulate_reduced(dm, alpha, input)?;
    let states = traj.states.take().expect("reduced simulation records states");
    TruthRecord::from_trajectory(traj, states, alpha, TruthSource::Reduced, noise)
}

/// Truth from the full-order model; states are mapped to reduced coordinates
/// by `Wᵀ`.
pub fn make_truth_full(
    model: &FullOrderModel,
    rom: &ReducedModel,
    alpha: f64,
    input: &InputSignal,
    noise: &NoiseSpec,
    opts: &FullSimOptions,
) -> Result<TruthRecord> {
    if rom.v.nrows() != model.dim() {
        return Err(Error::LengthMismatch {
            what: "reduced basis rows vs full state",
            left: rom.v.nrows(),
            right: model.dim(),
        });
    }
    let opts = FullSimOptions { keep_states: true, ..*opts };
    let mut traj = simulate_full(model, alpha, input, &opts)?;
    let wt = rom.w.transpose();
    let states = traj
        .states
        .take()
        .expect("states requested")
        .iter()
        .map(|x| &wt * x)
        .collect();
    TruthRecord::from_trajectory(traj, states, alpha, TruthSource::Full, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use crate::pmor::ParamDomain;

    fn scalar_dm() -> DiscreteModel {
        DiscreteModel {
            a: DMatrix::from_element(1, 1, 0.9),
            b: vec![DVector::from_element(1, 100.0), DVector::from_element(1, 10.0)],
            c_volume: vec![DVector::from_element(1, 1.0)],
            c_peak: DVector::from_element(1, 1.5),
            sample_time: 0.004,
            domain: ParamDomain::default(),
        }
    }

    #[test]
    fn zero_variance_is_clean() {
        let input = InputSignal::constant(0.03, 0.004, 50).unwrap();
        let t = make_truth_reduced(&scalar_dm(), 0.2, &input, &NoiseSpec { variance: 0.0, seed: 7 }).unwrap();
        assert_eq!(t.y_meas, t.y_volume);
        assert_eq!(t.states.len(), 50);
    }

    #[test]
    fn seeded_streams_repeat() {
        let noise = NoiseSpec { variance: 1.0, seed: 42 };
        assert_eq!(noise.draws(1000).unwrap(), noise.draws(1000).unwrap());
        let other = NoiseSpec { seed: 43, ..noise };
        assert_ne!(noise.draws(10).unwrap(), other.draws(10).unwrap());
    }

    #[test]
    fn empirical_variance() {
        for variance in [1.0, 0.25] {
            let eta = NoiseSpec { variance, seed: 3 }.draws(100_000).unwrap();
            let mean = eta.iter().sum::<f64>() / eta.len() as f64;
            let var = eta.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (eta.len() - 1) as f64;
            assert!((var / variance - 1.0).abs() < 0.03, "{var}");
        }
    }

    #[test]
    fn negative_variance_rejected() {
        assert!(NoiseSpec { variance: -1.0, seed: 0 }.draws(1).is_err());
    }
}
