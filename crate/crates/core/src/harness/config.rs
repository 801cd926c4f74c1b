//! Run configuration: a versioned JSON document; every omitted key takes its
//! default, unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{EkfSettings, MheSettings, DEFAULT_STATE_SCALING};
use crate::fundus::{FundusGeometry, GridSpec};
use crate::pmor::{Algorithm, ParamDomain, ReductionOptions};
use crate::sim::{FullSimOptions, Integrator, NoiseSpec, TruthSource, SAMPLE_TIME};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub geometry: FundusGeometry,
    pub grid: GridSpec,
    pub reduction: ReductionConfig,
    pub simulation: SimulationConfig,
    pub estimators: EstimatorConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            geometry: FundusGeometry::default(),
            grid: GridSpec::default(),
            reduction: ReductionConfig::default(),
            simulation: SimulationConfig::default(),
            estimators: EstimatorConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReductionConfig {
    pub order: usize,
    /// k_B
    pub input_order: usize,
    /// k_C
    pub output_order: usize,
    pub domain: ParamDomain,
    pub algorithm: Algorithm,
    pub fallback: bool,
    pub step_weighted: bool,
    pub match_dc: bool,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            order: 3,
            input_order: 8,
            output_order: 8,
            domain: ParamDomain::default(),
            algorithm: Algorithm::Irka,
            fallback: true,
            step_weighted: true,
            match_dc: true,
        }
    }
}

impl ReductionConfig {
    pub fn options(&self) -> ReductionOptions {
        ReductionOptions {
            algorithm: self.algorithm,
            fallback: self.fallback,
            step_weighted: self.step_weighted,
            match_dc: self.match_dc,
            ..ReductionOptions::new(self.order)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub alpha_true: f64,
    /// Constant laser power in W.
    pub power: f64,
    pub t_final: f64,
    pub sample_time: f64,
    /// σ² in K².
    pub noise_variance: f64,
    pub seed: u64,
    pub truth: TruthSource,
    pub substeps: usize,
    pub integrator: Integrator,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            alpha_true: 0.3,
            power: 0.03,
            t_final: 2.0,
            sample_time: SAMPLE_TIME,
            noise_variance: 1.0,
            seed: 0,
            truth: TruthSource::Full,
            substeps: 10,
            integrator: Integrator::CrankNicolson,
        }
    }
}

impl SimulationConfig {
    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            variance: self.noise_variance,
            seed: self.seed,
        }
    }

    pub fn full_options(&self) -> FullSimOptions {
        FullSimOptions {
            substeps: self.substeps,
            integrator: self.integrator,
            keep_states: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EkfBlock {
    pub enabled: bool,
    /// Diagonal of Q; `None` means `(10⁻³, …, 10⁻³, 0.15)`.
    pub q: Option<Vec<f64>>,
    /// One EKF per entry.
    pub r: Vec<f64>,
    pub p0: Option<Vec<f64>>,
}

impl Default for EkfBlock {
    fn default() -> Self {
        Self {
            enabled: true,
            q: None,
            r: vec![1e2],
            p0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MheBlock {
    pub enabled: bool,
    pub q: Option<Vec<f64>>,
    /// One MHE per `(horizon, r)` pair.
    pub r: Vec<f64>,
    pub horizon: Vec<usize>,
    /// Arrival-cost weight; `None` uses Q.
    pub p: Option<Vec<f64>>,
    pub max_iterations: usize,
    pub step_tolerance: f64,
}

impl Default for MheBlock {
    fn default() -> Self {
        Self {
            enabled: true,
            q: None,
            r: vec![1e2],
            horizon: vec![5],
            p: None,
            max_iterations: 50,
            step_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    pub state_scaling: f64,
    pub alpha0: f64,
    /// Tolerance on |α̂ − α| for the reported convergence time.
    pub alpha_tolerance: f64,
    pub ekf: EkfBlock,
    pub mhe: MheBlock,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            state_scaling: DEFAULT_STATE_SCALING,
            alpha0: 0.0,
            alpha_tolerance: 0.05,
            ekf: EkfBlock::default(),
            mhe: MheBlock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Relative paths are resolved against the output root.
    pub directory: String,
    /// Adds a per-step wall-time column to the estimator CSVs (makes them
    /// non-reproducible).
    pub record_wall_time: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "runs/default".into(),
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    Ekf { name: String, settings: EkfSettings },
    Mhe { name: String, settings: MheSettings },
}

impl EstimatorSpec {
    pub fn name(&self) -> &str {
        match self {
            Self::Ekf { name, .. } | Self::Mhe { name, .. } => name,
        }
    }
}

fn label(r: f64) -> String {
    if r.fract() == 0.0 && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}").replace('.', "p")
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} unsupported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.geometry.validate()?;
        let r = &self.reduction;
        if r.order == 0 {
            return Err(Error::Config("reduction order must be at least 1".into()));
        }
        let s = &self.simulation;
        if !r.domain.contains(s.alpha_true) {
            return Err(Error::Config(format!("alpha_true {} outside the parameter domain", s.alpha_true)));
        }
        if !(s.power >= 0.0 && s.power.is_finite()) {
            return Err(Error::Config(format!("power {} must be nonnegative", s.power)));
        }
        positive("t_final", s.t_final)?;
        positive("sample_time", s.sample_time)?;
        s.noise().validate()?;
        if s.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        let e = &self.estimators;
        positive("state_scaling", e.state_scaling)?;
        positive("alpha_tolerance", e.alpha_tolerance)?;
        if !r.domain.contains(e.alpha0) {
            return Err(Error::Config(format!("alpha0 {} outside the parameter domain", e.alpha0)));
        }
        let m = r.order + 1;
        for (what, q) in [
            ("ekf.q", &e.ekf.q),
            ("ekf.p0", &e.ekf.p0),
            ("mhe.q", &e.mhe.q),
            ("mhe.p", &e.mhe.p),
        ] {
            if let Some(q) = q {
                if q.len() != m {
                    return Err(Error::Config(format!("{what} has {} entries, expected {m}", q.len())));
                }
            }
        }
        for v in e.ekf.r.iter().chain(&e.mhe.r) {
            positive("R", *v)?;
        }
        if e.ekf.enabled && e.ekf.r.is_empty() {
            return Err(Error::Config("ekf.r must list at least one value".into()));
        }
        if e.mhe.enabled && (e.mhe.r.is_empty() || e.mhe.horizon.is_empty()) {
            return Err(Error::Config("mhe.r and mhe.horizon must list at least one value".into()));
        }
        if e.mhe.max_iterations == 0 {
            return Err(Error::Config("mhe.max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    /// Estimators expanded over the R and horizon sweeps, in a fixed order.
    pub fn estimator_specs(&self) -> Vec<EstimatorSpec> {
        let n = self.reduction.order;
        let e = &self.estimators;
        let mut specs = Vec::new();
        if e.ekf.enabled {
            for &r in &e.ekf.r {
                let mut settings = EkfSettings::reference(n);
                if let Some(q) = &e.ekf.q {
                    settings.q = q.clone();
                }
                settings.r = r;
                settings.p0 = e.ekf.p0.clone();
                settings.alpha0 = e.alpha0;
                specs.push(EstimatorSpec::Ekf {
                    name: format!("ekf_r{}", label(r)),
                    settings,
                });
            }
        }
        if e.mhe.enabled {
            for &horizon in &e.mhe.horizon {
                for &r in &e.mhe.r {
                    let mut settings = MheSettings::reference(n);
                    if let Some(q) = &e.mhe.q {
                        settings.q = q.clone();
                    }
                    settings.r = r;
                    settings.horizon = horizon;
                    settings.p = e.mhe.p.clone();
                    settings.alpha0 = e.alpha0;
                    settings.max_iterations = e.mhe.max_iterations;
                    settings.step_tolerance = e.mhe.step_tolerance;
                    specs.push(EstimatorSpec::Mhe {
                        name: format!("mhe_n{horizon}_r{}", label(r)),
                        settings,
                    });
                }
            }
        }
        specs
    }
}
