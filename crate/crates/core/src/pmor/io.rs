//! Versioned JSON documents for reduced and discrete models.
//!
//! Dense matrices are stored as `{rows, cols, data}` with `data` in row-major
//! order; floats are written with round-trip precision.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::moments::ParamDomain;
use super::reduced::{DiscreteModel, ReducedModel, ReductionInfo};
use crate::error::{Error, Result};

pub const SCHEMA: &str = "fundus-rom";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for Dense {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter());
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl Dense {
    fn matrix(&self) -> Result<DMatrix<f64>> {
        if self.rows * self.cols != self.data.len() {
            return Err(Error::Document(format!(
                "{}x{} matrix with {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

fn vectors(v: &[DVector<f64>]) -> Vec<Vec<f64>> {
    v.iter().map(|x| x.as_slice().to_vec()).collect()
}

fn from_vectors(v: &[Vec<f64>], len: usize, what: &str) -> Result<Vec<DVector<f64>>> {
    v.iter()
        .map(|x| {
            if x.len() == len {
                Ok(DVector::from_column_slice(x))
            } else {
                Err(Error::Document(format!("{what} has length {}, expected {len}", x.len())))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedDoc {
    pub a: Dense,
    pub b: Vec<Vec<f64>>,
    pub c_volume: Vec<Vec<f64>>,
    pub c_peak: Vec<f64>,
    pub v: Dense,
    pub w: Dense,
    pub domain: ParamDomain,
    pub info: ReductionInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteDoc {
    pub a: Dense,
    pub b: Vec<Vec<f64>>,
    pub c_volume: Vec<Vec<f64>>,
    pub c_peak: Vec<f64>,
    pub sample_time: f64,
    pub domain: ParamDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub schema: String,
    pub version: u32,
    pub reduced: ReducedDoc,
    pub discrete: DiscreteDoc,
}

impl ModelDocument {
    pub fn new(rom: &ReducedModel, dm: &DiscreteModel) -> Self {
        Self {
            schema: SCHEMA.into(),
            version: SCHEMA_VERSION,
            reduced: ReducedDoc {
                a: (&rom.a).into(),
                b: vectors(&rom.b),
                c_volume: vectors(&rom.c_volume),
                c_peak: rom.c_peak.as_slice().to_vec(),
                v: (&rom.v).into(),
                w: (&rom.w).into(),
                domain: rom.domain,
                info: rom.info.clone(),
            },
            discrete: DiscreteDoc {
                a: (&dm.a).into(),
                b: vectors(&dm.b),
                c_volume: vectors(&dm.c_volume),
                c_peak: dm.c_peak.as_slice().to_vec(),
                sample_time: dm.sample_time,
                domain: dm.domain,
            },
        }
    }

    pub fn models(&self) -> Result<(ReducedModel, DiscreteModel)> {
        if self.schema != SCHEMA || self.version != SCHEMA_VERSION {
            return Err(Error::Document(format!(
                "unsupported schema {} v{} (expected {SCHEMA} v{SCHEMA_VERSION})",
                self.schema, self.version
            )));
        }
        let r = &self.reduced;
        let a = r.a.matrix()?;
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Document("reduced A is not square".into()));
        }
        let rom = ReducedModel {
            b: from_vectors(&r.b, n, "reduced b")?,
            c_volume: from_vectors(&r.c_volume, n, "reduced c_volume")?,
            c_peak: from_vectors(std::slice::from_ref(&r.c_peak), n, "reduced c_peak")?.remove(0),
            v: r.v.matrix()?,
            w: r.w.matrix()?,
            a,
            domain: r.domain,
            info: r.info.clone(),
        };
        let d = &self.discrete;
        let ad = d.a.matrix()?;
        if ad.nrows() != n || ad.ncols() != n {
            return Err(Error::Document("discrete A does not match the reduced order".into()));
        }
        let dm = DiscreteModel {
            a: ad,
            b: from_vectors(&d.b, n, "discrete b")?,
            c_volume: from_vectors(&d.c_volume, n, "discrete c_volume")?,
            c_peak: from_vectors(std::slice::from_ref(&d.c_peak), n, "discrete c_peak")?.remove(0),
            sample_time: d.sample_time,
            domain: d.domain,
        };
        rom.validate()?;
        dm.validate()?;
        Ok((rom, dm))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Document(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}
