use nalgebra::DVector;

/// Sampled outputs at `t_k = k T_s`; `u[k]` is the power applied after `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub time: Vec<f64>,
    pub input: Vec<f64>,
    pub y_volume: Vec<f64>,
    pub y_peak: Vec<f64>,
    pub states: Option<Vec<DVector<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}

/// `‖a − b‖₂ / ‖b‖₂` over sampled series, a trapezoid-free discrete L² norm.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
