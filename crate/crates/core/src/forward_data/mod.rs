//! Synthetic data: forward solves for a source moving along a line, boundary
//! traces, noise, smoothing, the log transform and differences in the source
//! position.

mod forward;
mod layout;
mod measurement;
mod processing;
mod schedule;

pub use forward::{solve_forward, BoundaryModel, ForwardModel};
pub use layout::{MeasurementLayout, MeasurementPoint, Side};
pub use measurement::{MeasurementSet, Preprocessing, SourceTrace};
pub use processing::{add_noise, add_noise_stream, average_psi, denoise_polyfit, log_transform, s_derivative, LOG_FLOOR};
pub use schedule::SourceSchedule;

pub use layout::interp_sorted;
