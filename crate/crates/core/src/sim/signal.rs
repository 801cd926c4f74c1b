use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default sampling period of the measurement system (250 Hz).
pub const SAMPLE_TIME: f64 = 1.0 / 250.0;

/// Piecewise-constant laser power `u_k` (W) held over `[k T_s, (k+1) T_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSignal {
    sample_time: f64,
    samples: Vec<f64>,
}

impl InputSignal {
    pub fn new(sample_time: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_time > 0.0 && sample_time.is_finite()) {
            return Err(Error::Input(format!("sample time {sample_time} must be positive")));
        }
        if let Some((k, u)) = samples
            .iter()
            .enumerate()
            .find(|(_, u)| !(u.is_finite() && **u >= 0.0))
        {
            return Err(Error::Input(format!("power u[{k}] = {u} must be finite and nonnegative")));
        }
        Ok(Self {
            sample_time,
            samples,
        })
    }

    pub fn constant(power: f64, sample_time: f64, steps: usize) -> Result<Self> {
        Self::new(sample_time, vec![power; steps])
    }

    /// Number of samples covering `[0, t_final]`, both ends included.
    pub fn steps_for(t_final: f64, sample_time: f64) -> usize {
        (t_final / sample_time).round() as usize + 1
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.sample_time, self.samples.iter().map(|u| u * factor).collect())
    }
}
