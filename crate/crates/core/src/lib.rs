//! Dynamic nested clustering (DNC) for uplink MMSE detection in cloud radio
//! access networks.
//!
//! The pipeline: generate a layout ([`netgen`]) and Rayleigh channel
//! ([`channel`]), discard links longer than a distance threshold chosen from
//! an analytic SINR-loss bound ([`threshold`]), label the radio heads so the
//! sparsified detection matrix becomes (nested) doubly-bordered block-diagonal
//! ([`cluster`]), and solve it with parallel Schur complements ([`solver`]).
//! [`planner`] picks cluster sizes and computing modes from a cost model.

pub mod channel;
pub mod cluster;
pub mod detect;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod netgen;
pub mod planner;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod sparse;
pub mod threshold;

pub use error::{DncError, Result};
