//! Layer stack, material constants and cylinder dimensions of the fundus model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One tissue layer. Thickness in meters, nominal absorption µ₀ in 1/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub name: String,
    pub thickness: f64,
    pub absorption: f64,
}

impl Layer {
    pub fn new(name: impl Into<String>, thickness: f64, absorption: f64) -> Self {
        Self {
            name: name.into(),
            thickness,
            absorption,
        }
    }
}

/// Ordered layers, first entry at the irradiated surface (smallest depth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Layer>", into = "Vec<Layer>")]
pub struct LayerStack {
    layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Geometry("layer stack is empty".into()));
        }
        for layer in &layers {
            if !(layer.thickness > 0.0) || !layer.thickness.is_finite() {
                return Err(Error::Geometry(format!(
                    "layer '{}' has non-positive thickness {}",
                    layer.name, layer.thickness
                )));
            }
            if !(layer.absorption >= 0.0) || !layer.absorption.is_finite() {
                return Err(Error::Geometry(format!(
                    "layer '{}' has negative absorption {}",
                    layer.name, layer.absorption
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Average porcine fundus, retina first.
    pub fn porcine() -> Self {
        Self {
            layers: vec![
                Layer::new("retina", 190e-6, 0.0),
                Layer::new("rpe", 6e-6, 1204e2),
                Layer::new("unpigmented", 4e-6, 0.0),
                Layer::new("choroid", 400e-6, 270e2),
                Layer::new("sclera", 139e-6, 0.0),
            ],
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.layers
            .iter()
            .position(|l| l.name.eq_ignore_ascii_case(name))
    }

    /// Depths of the layer boundaries measured from the surface, `len() + 1` entries.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        let mut z = 0.0;
        out.push(z);
        for layer in &self.layers {
            z += layer.thickness;
            out.push(z);
        }
        out
    }
}

impl Default for LayerStack {
    fn default() -> Self {
        Self::porcine()
    }
}

impl TryFrom<Vec<Layer>> for LayerStack {
    type Error = Error;

    fn try_from(layers: Vec<Layer>) -> Result<Self> {
        Self::new(layers)
    }
}

impl From<LayerStack> for Vec<Layer> {
    fn from(stack: LayerStack) -> Self {
        stack.layers
    }
}

/// Thermal properties, taken equal to those of water.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialConstants {
    /// ρ in kg/m³
    pub density: f64,
    /// C_p in J/(kg·K)
    pub heat_capacity: f64,
    /// k in W/(m·K)
    pub conductivity: f64,
}

impl Default for MaterialConstants {
    fn default() -> Self {
        Self {
            density: 993.0,
            heat_capacity: 4176.0,
            conductivity: 0.627,
        }
    }
}

impl MaterialConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("density", self.density),
            ("heat_capacity", self.heat_capacity),
            ("conductivity", self.conductivity),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Geometry(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Volumetric heat capacity ρC_p in J/(m³·K).
    pub fn volumetric_heat_capacity(&self) -> f64 {
        self.density * self.heat_capacity
    }

    /// Thermal diffusivity k/(ρC_p) in m²/s.
    pub fn diffusivity(&self) -> f64 {
        self.conductivity / self.volumetric_heat_capacity()
    }
}

/// Inner (irradiated) and outer cylinder with the layer stack along the axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FundusGeometry {
    /// Radius R_I of the irradiated spot in meters.
    pub spot_radius: f64,
    /// Radius of the outer cylinder carrying the Dirichlet boundary, meters.
    pub outer_radius: f64,
    /// Axial coordinate z_b of the surface.
    pub z_begin: f64,
    pub layers: LayerStack,
    pub materials: MaterialConstants,
    /// Name of the layer whose axial midpoint hosts the peak-temperature output.
    pub peak_layer: String,
}

impl Default for FundusGeometry {
    fn default() -> Self {
        Self {
            spot_radius: 1e-4,
            outer_radius: 1e-3,
            z_begin: 0.0,
            layers: LayerStack::porcine(),
            materials: MaterialConstants::default(),
            peak_layer: "rpe".into(),
        }
    }
}

impl FundusGeometry {
    pub fn validate(&self) -> Result<()> {
        self.materials.validate()?;
        if !(self.spot_radius > 0.0) {
            return Err(Error::Geometry(format!(
                "spot radius must be positive, got {}",
                self.spot_radius
            )));
        }
        if !(self.outer_radius > self.spot_radius) {
            return Err(Error::Geometry(format!(
                "outer radius {} must exceed the spot radius {}",
                self.outer_radius, self.spot_radius
            )));
        }
        if !self.z_begin.is_finite() {
            return Err(Error::Geometry("z_begin must be finite".into()));
        }
        self.peak_layer_index()?;
        Ok(())
    }

    pub fn z_end(&self) -> f64 {
        self.z_begin + self.layers.total_thickness()
    }

    pub fn peak_layer_index(&self) -> Result<usize> {
        self.layers.position(&self.peak_layer).ok_or_else(|| {
            Error::Geometry(format!("peak layer '{}' not in the stack", self.peak_layer))
        })
    }

    /// Axial position of the peak-temperature output (mid-depth of the peak layer).
    pub fn peak_depth(&self) -> Result<f64> {
        let idx = self.peak_layer_index()?;
        let bounds = self.layers.boundaries();
        Ok(self.z_begin + 0.5 * (bounds[idx] + bounds[idx + 1]))
    }

    /// Cumulative optical depth s(z) = ∫_{z_b}^{z} µ₀(ζ) dζ, clamped to the stack.
    pub fn optical_depth(&self, z: f64) -> f64 {
        let mut depth = 0.0;
        let mut top = self.z_begin;
        for layer in self.layers.layers() {
            let bottom = top + layer.thickness;
            if z <= top {
                break;
            }
            depth += layer.absorption * (z.min(bottom) - top);
            top = bottom;
        }
        depth
    }

    /// Nominal absorption µ₀ at depth z; boundaries belong to the deeper layer.
    pub fn absorption_at(&self, z: f64) -> f64 {
        let mut top = self.z_begin;
        let n = self.layers.len();
        for (i, layer) in self.layers.layers().iter().enumerate() {
            let bottom = top + layer.thickness;
            if z < bottom || i + 1 == n {
                return if z >= top { layer.absorption } else { 0.0 };
            }
            top = bottom;
        }
        0.0
    }
}
