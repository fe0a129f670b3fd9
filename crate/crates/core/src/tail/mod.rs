//! The tail: an approximation of the log-field for the source nearest the
//! domain, built from an asymptotic first guess and refined by a relaxed
//! fixed-point iteration.

mod accelerator;
mod first_guess;

pub use accelerator::{
    accelerator_step, relaxation_lambda, run_accelerator, run_accelerator_with, AcceleratorConfig, AcceleratorOutcome,
    AcceleratorRecord,
};
pub use first_guess::{asymptotic_log, decompose_g, first_guess_tail, pseudo_distance, TailFunction, TailOrigin};
