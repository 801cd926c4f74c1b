//! Full-order fundus heat model: geometry, axisymmetric grid, diffusion operator
//! and the absorption-parameterised input/output operators.

pub mod diffusion;
pub mod geometry;
pub mod grid;
pub mod matrix_market;
pub mod model;
pub mod taylor;

pub use diffusion::{assemble_diffusion, DiffusionOperator};
pub use geometry::{FundusGeometry, Layer, LayerStack, MaterialConstants};
pub use grid::{build_grid, AxiGrid, GridSpec, RadialSpacing};
pub use model::FullOrderModel;
