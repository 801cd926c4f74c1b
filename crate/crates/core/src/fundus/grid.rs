//! Axisymmetric tensor grid in the (r, z) half-plane.
//!
//! Nodes sit on `r = 0` (symmetry axis, carries an unknown) and on the three
//! Dirichlet boundaries `r = R_out`, `z = z_b`, `z = z_e` (no unknowns). Every
//! layer interface is a grid node, and the peak layer has an odd node count so
//! that its mid-depth is a node as well.

use serde::{Deserialize, Serialize};

use super::geometry::FundusGeometry;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialSpacing {
    Uniform,
    /// Uniform spacing `R_I / spot_intervals` up to `2 R_I`, geometric growth outside.
    Graded { spot_intervals: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Number of radial intervals between the axis and `R_out`.
    pub radial_intervals: usize,
    pub radial: RadialSpacing,
    /// Nodes per layer including both interfaces (shared with neighbours).
    pub layer_nodes: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            radial_intervals: 40,
            radial: RadialSpacing::Graded { spot_intervals: 8 },
            layer_nodes: vec![21, 9, 5, 41, 17],
        }
    }
}

impl GridSpec {
    /// Same spacing law with every interval count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            radial_intervals: self.radial_intervals * factor,
            radial: match self.radial {
                RadialSpacing::Uniform => RadialSpacing::Uniform,
                RadialSpacing::Graded { spot_intervals } => RadialSpacing::Graded {
                    spot_intervals: spot_intervals * factor,
                },
            },
            layer_nodes: self
                .layer_nodes
                .iter()
                .map(|&m| (m - 1) * factor + 1)
                .collect(),
        }
    }

    /// Halves every interval count; fails if any count is odd.
    pub fn coarsened(&self) -> Result<Self> {
        let half = |v: usize, what: &str| {
            if v.is_multiple_of(2) && v >= 2 {
                Ok(v / 2)
            } else {
                Err(Error::Grid(format!("cannot halve {what} count {v}")))
            }
        };
        Ok(Self {
            radial_intervals: half(self.radial_intervals, "radial interval")?,
            radial: match self.radial {
                RadialSpacing::Uniform => RadialSpacing::Uniform,
                RadialSpacing::Graded { spot_intervals } => RadialSpacing::Graded {
                    spot_intervals: half(spot_intervals, "spot interval")?,
                },
            },
            layer_nodes: self
                .layer_nodes
                .iter()
                .map(|&m| half(m - 1, "layer interval").map(|k| k + 1))
                .collect::<Result<_>>()?,
        })
    }
}

/// Tensor grid with node coordinates and the node → unknown map.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiGrid {
    r: Vec<f64>,
    z: Vec<f64>,
    /// Layer index of each axial interval `[z_j, z_{j+1}]`.
    interval_layer: Vec<usize>,
    /// Axial index of every layer interface (len = layers + 1).
    interfaces: Vec<usize>,
    peak_z: usize,
}

impl AxiGrid {
    pub fn radial_nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn axial_nodes(&self) -> &[f64] {
        &self.z
    }

    /// Number of radial intervals `Nr`.
    pub fn nr(&self) -> usize {
        self.r.len() - 1
    }

    /// Number of axial intervals `Nz`.
    pub fn nz(&self) -> usize {
        self.z.len() - 1
    }

    pub fn n_unknowns(&self) -> usize {
        self.nr() * (self.nz() - 1)
    }

    /// Unknown index of node `(i, j)`, `None` on a Dirichlet boundary.
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.nr() || j == 0 || j >= self.nz() {
            None
        } else {
            Some((j - 1) * self.nr() + i)
        }
    }

    /// Inverse of [`AxiGrid::index`].
    pub fn node(&self, unknown: usize) -> (usize, usize) {
        (unknown % self.nr(), unknown / self.nr() + 1)
    }

    pub fn interval_layer(&self, j: usize) -> usize {
        self.interval_layer[j]
    }

    /// Layer of axial node `j`; an interface node is assigned to the deeper layer.
    pub fn node_layer(&self, j: usize) -> usize {
        self.interval_layer[j.min(self.nz() - 1)]
    }

    pub fn interface_indices(&self) -> &[usize] {
        &self.interfaces
    }

    pub fn interface_depths(&self) -> Vec<f64> {
        self.interfaces.iter().map(|&j| self.z[j]).collect()
    }

    /// Unknown index of the peak-temperature node `(r = 0, mid-depth of the peak layer)`.
    pub fn peak_unknown(&self) -> usize {
        self.index(0, self.peak_z).expect("peak node is interior")
    }

    pub fn peak_axial_index(&self) -> usize {
        self.peak_z
    }

    /// Radial extent `[r_{i-1/2}, r_{i+1/2}]` of the control volume of radial node `i`.
    pub fn radial_cell(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            0.0
        } else {
            0.5 * (self.r[i - 1] + self.r[i])
        };
        let hi = if i == self.nr() {
            self.r[i]
        } else {
            0.5 * (self.r[i] + self.r[i + 1])
        };
        (lo, hi)
    }

    /// Axial extent of the control volume of axial node `j`.
    pub fn axial_cell(&self, j: usize) -> (f64, f64) {
        let lo = if j == 0 {
            self.z[0]
        } else {
            0.5 * (self.z[j - 1] + self.z[j])
        };
        let hi = if j == self.nz() {
            self.z[j]
        } else {
            0.5 * (self.z[j] + self.z[j + 1])
        };
        (lo, hi)
    }

    /// Cross-section area π(r₊² − r₋²) of radial cell `i`.
    pub fn cell_area(&self, i: usize) -> f64 {
        let (lo, hi) = self.radial_cell(i);
        std::f64::consts::PI * (hi * hi - lo * lo)
    }

    /// Diagonal of control-volume sizes, one per unknown.
    pub fn cell_volumes(&self) -> Vec<f64> {
        (0..self.n_unknowns())
            .map(|u| {
                let (i, j) = self.node(u);
                let (zl, zh) = self.axial_cell(j);
                self.cell_area(i) * (zh - zl)
            })
            .collect()
    }
}

/// Builds the grid for `geometry` with the node counts in `spec`.
pub fn build_grid(geometry: &FundusGeometry, spec: &GridSpec) -> Result<AxiGrid> {
    geometry.validate()?;
    if spec.radial_intervals < 8 {
        return Err(Error::Grid(format!(
            "need at least 8 radial intervals, got {}",
            spec.radial_intervals
        )));
    }
    let layers = geometry.layers.layers();
    if spec.layer_nodes.len() != layers.len() {
        return Err(Error::Grid(format!(
            "{} node counts given for {} layers",
            spec.layer_nodes.len(),
            layers.len()
        )));
    }
    if let Some(&m) = spec.layer_nodes.iter().find(|&&m| m < 2) {
        return Err(Error::Grid(format!(
            "every layer needs at least 2 nodes, got {m}"
        )));
    }
    let peak = geometry.peak_layer_index()?;
    if spec.layer_nodes[peak].is_multiple_of(2) {
        return Err(Error::Grid(format!(
            "peak layer '{}' needs an odd node count to place its mid-depth on a node, got {}",
            geometry.peak_layer, spec.layer_nodes[peak]
        )));
    }

    let r = radial_nodes(geometry, spec)?;

    let mut z = vec![geometry.z_begin];
    let mut interval_layer = Vec::new();
    let mut interfaces = vec![0];
    let mut top = geometry.z_begin;
    let mut peak_z = 0;
    for (li, (layer, &m)) in layers.iter().zip(&spec.layer_nodes).enumerate() {
        let intervals = m - 1;
        let h = layer.thickness / intervals as f64;
        for k in 1..=intervals {
            // The last node is placed exactly on the interface to avoid drift.
            let zk = if k == intervals {
                top + layer.thickness
            } else {
                top + h * k as f64
            };
            z.push(zk);
            interval_layer.push(li);
        }
        if li == peak {
            peak_z = interfaces[li] + intervals / 2;
        }
        top += layer.thickness;
        interfaces.push(z.len() - 1);
    }
    if z.len() < 3 {
        return Err(Error::Grid("axial grid has no interior nodes".into()));
    }
    if z.windows(2).any(|w| !(w[1] > w[0])) || r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("node spacing must be strictly positive".into()));
    }
    Ok(AxiGrid {
        r,
        z,
        interval_layer,
        interfaces,
        peak_z,
    })
}

fn radial_nodes(geometry: &FundusGeometry, spec: &GridSpec) -> Result<Vec<f64>> {
    let n = spec.radial_intervals;
    let outer = geometry.outer_radius;
    match spec.radial {
        RadialSpacing::Uniform => {
            let h = outer / n as f64;
            Ok((0..=n)
                .map(|i| if i == n { outer } else { h * i as f64 })
                .collect())
        }
        RadialSpacing::Graded { spot_intervals } => {
            if spot_intervals == 0 {
                return Err(Error::Grid("spot_intervals must be positive".into()));
            }
            let fine = 2 * spot_intervals;
            let h = geometry.spot_radius / spot_intervals as f64;
            let fine_end = 2.0 * geometry.spot_radius;
            if fine_end >= outer {
                // Outer cylinder too small for a graded region: fall back to uniform.
                return radial_nodes(
                    geometry,
                    &GridSpec {
                        radial: RadialSpacing::Uniform,
                        ..spec.clone()
                    },
                );
            }
            if n <= fine {
                return Err(Error::Grid(format!(
                    "{n} radial intervals cannot hold {fine} fine intervals plus a graded part"
                )));
            }
            let outer_count = n - fine;
            let ratio = growth_ratio(h, outer - fine_end, outer_count)?;
            let mut r: Vec<f64> = (0..=fine).map(|i| h * i as f64).collect();
            r[fine] = fine_end;
            let mut step = h;
            for k in 1..=outer_count {
                step *= ratio;
                let next = if k == outer_count {
                    outer
                } else {
                    r[r.len() - 1] + step
                };
                r.push(next);
            }
            Ok(r)
        }
    }
}

/// Ratio q with `h (q + q² + … + q^count) = length`.
fn growth_ratio(h: f64, length: f64, count: usize) -> Result<f64> {
    let total = |q: f64| (1..=count).map(|k| h * q.powi(k as i32)).sum::<f64>();
    let (mut lo, mut hi) = (1e-3, 1.0);
    while total(hi) < length {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Grid("radial growth ratio out of range".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
