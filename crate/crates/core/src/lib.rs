//! Reconstruction of the absorption coefficient of a 2D diffusion equation
//! from boundary measurements of a point source moving along a line.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`forward_data`] simulates the measurements: forward solves on an
//!    enlarged domain, boundary traces, multiplicative noise, polynomial
//!    denoising, the log transform and finite differences in the source
//!    position.
//! 2. [`tail`] builds the tail function (the log-field for the last
//!    source) from an asymptotic first guess and a relaxed fixed-point
//!    refinement.
//! 3. [`inversion`] solves the layer-stripping sequence for `q_n`,
//!    rebuilds the field for each source and recovers the coefficient from
//!    the weak form of the equation.
//! 4. [`metrics`] scores a reconstruction against a known phantom.
//!
//! [`grid_fem`] carries the finite-element machinery shared by all stages
//! and [`cli`] wires everything into reproducible runs.

pub mod cli;
pub mod error;
pub mod forward_data;
pub mod grid_fem;
pub mod inversion;
pub mod metrics;
pub mod tail;

pub use error::{Error, Result};
