//! Model-based estimation of tissue temperature and absorption for retinal
//! laser treatment.
//!
//! The pipeline assembles a layered axisymmetric heat-diffusion model of the
//! eye fundus ([`fundus`]), reduces it to a low-order surrogate that keeps the
//! polynomial dependence on the absorption prefactor α ([`pmor`]), simulates
//! synthetic measurements ([`sim`]) and estimates the reduced state together
//! with α by an extended Kalman filter or a moving horizon estimator
//! ([`estimators`]). [`harness`] wires the stages into reproducible runs.

pub mod error;
pub mod estimators;
pub mod fundus;
pub mod harness;
pub mod linalg;
pub mod pmor;
pub mod sim;

pub use error::{Error, Result};
