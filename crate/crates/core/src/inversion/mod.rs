//! Layer stripping: inner iterations for the derivative fields, field
//! reconstruction and coefficient recovery.

mod recovery;
mod stages;

pub use recovery::{Recovered, RecoveryBasis, RecoveryOptions};
pub use stages::{reconstruct_field, solve_q1, solve_qn, InnerConfig, QStage};

use crate::error::{Error, Result};
use crate::forward_data::MeasurementSet;
use crate::grid_fem::ScalarField;
use crate::tail::AcceleratorOutcome;

/// Settings of [`run_inversion`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub inner: InnerConfig,
    pub recovery: RecoveryOptions,
}

/// Everything produced by one inversion.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// Stage coefficients; the first comes from the tail refinement.
    pub stages: Vec<ScalarField>,
    /// Mean of the stage coefficients.
    pub coefficient: ScalarField,
    pub q: Vec<QStage>,
    /// Coefficient recovered after the last derivative stage. It belongs to
    /// no averaging interval and is kept for diagnostics only.
    pub trailing: ScalarField,
    /// Nodes floored during each stage recovery.
    pub floored: Vec<usize>,
}

/// Arithmetic mean of fields, summed in order.
pub fn stage_mean(stages: &[ScalarField]) -> Result<ScalarField> {
    let first = stages.first().ok_or_else(|| Error::EmptyInterval("no stages to average".into()))?;
    let mut sum = vec![0.0; first.len()];
    for s in stages {
        s.check_same_mesh(first)?;
        for (acc, v) in sum.iter_mut().zip(s.values()) {
            *acc += v;
        }
    }
    let n = stages.len() as f64;
    ScalarField::new(*first.mesh(), sum.into_iter().map(|v| v / n).collect())
}

/// Run every derivative stage from the last source back to the first.
///
/// Stage `n` uses the data of the `n`-th interval counted from the last
/// source; the coefficient recovered after stage `n` is stage coefficient
/// `n + 1`. The result averages the tail coefficient and stages `2..=N`.
pub fn run_inversion(
    data: &MeasurementSet,
    tail: &AcceleratorOutcome,
    basis: &RecoveryBasis,
    config: &InversionConfig,
) -> Result<ReconstructionResult> {
    run_inversion_with(data, tail, basis, config, |_, _, _| Ok(()))
}

/// [`run_inversion`] with a callback receiving `(n, q_n, coefficient)` as
/// soon as stage `n` finishes, so partial results survive a later failure.
pub fn run_inversion_with(
    data: &MeasurementSet,
    tail: &AcceleratorOutcome,
    basis: &RecoveryBasis,
    config: &InversionConfig,
    mut on_stage: impl FnMut(usize, &QStage, &ScalarField) -> Result<()>,
) -> Result<ReconstructionResult> {
    let mesh = *tail.tail.mesh();
    if !mesh.same_grid(basis.mesh()) {
        return Err(Error::MeshMismatch("tail and recovery basis differ".into()));
    }
    let intervals = data.schedule().intervals();
    let step = data.schedule().step();
    let mut q_fields: Vec<ScalarField> = Vec::with_capacity(intervals);
    let mut q = Vec::with_capacity(intervals);
    let mut stages = vec![tail.coefficient.clone()];
    let mut floored = Vec::with_capacity(intervals);
    let mut trailing = tail.coefficient.clone();
    for n in 1..=intervals {
        let psi = data.psi(intervals - n);
        let boundary = data.layout().boundary_values(psi, &mesh)?;
        let stage = solve_qn(&q_fields, &boundary, &tail.tail, step, &config.inner)?;
        q_fields.push(stage.field.clone());
        let (_, u) = reconstruct_field(&q_fields, &tail.tail, step)?;
        let rec = basis.recover(&u, config.recovery)?;
        on_stage(n, &stage, &rec.coefficient)?;
        q.push(stage);
        floored.push(rec.floored);
        if n < intervals {
            stages.push(rec.coefficient);
        } else {
            trailing = rec.coefficient;
        }
    }
    let coefficient = stage_mean(&stages)?;
    Ok(ReconstructionResult { stages, coefficient, q, trailing, floored })
}
