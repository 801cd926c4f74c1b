//! Parametric reduction of the fundus model and zero-order-hold discretisation.

pub mod augmented;
pub mod balanced;
pub mod io;
pub mod irka;
pub mod moments;
pub mod reduced;
pub mod shifted;

pub use augmented::{build_augmented_system, AugmentedSystem};
pub use io::ModelDocument;
pub use moments::{moment_factor, moment_matrix, ParamDomain};
pub use reduced::{
    discretize_zoh, reduce, Algorithm, DiscreteModel, ReducedModel, ReductionInfo,
    ReductionOptions, STATE_SCALE,
};
