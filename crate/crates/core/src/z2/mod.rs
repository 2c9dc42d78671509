//! Imaginary-time evolution of the Z2 lattice gauge theory purification on a
//! 2x2 unit cell, with ZMT or SVD truncation of the plaquette bonds.

pub mod cell;
pub mod evolve;
pub mod model;
pub mod mpo;
pub mod ntu;
pub mod report;

pub use cell::{electric_half_step, initial_state, UnitCell};
pub use evolve::{
    evolve, evolve_with, inverse_trotter_step, trotter_step, EvolveConfig, EvolveFailure,
    StepAverage, Trajectory,
};
pub use model::{model_operators, ModelOperators, ModelParams};
pub use mpo::{build_plaquette_mpo, PlaquetteMPO};
pub use ntu::{apply_and_truncate_plaquette, AlsOptions, ErrorRecord, Method, UpdateOptions};
