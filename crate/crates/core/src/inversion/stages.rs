use crate::error::{Error, Result};
use crate::grid_fem::{assemble_elliptic, gradient, EllipticProblem, ScalarField};
use crate::tail::TailFunction;

/// Stopping rule of the inner iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    /// Bound on the L2 norm of the change between iterates.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { tolerance: 1e-5, max_iters: 100 }
    }
}

/// A converged derivative field with the L2 changes of its inner iterations.
#[derive(Debug, Clone)]
pub struct QStage {
    pub field: ScalarField,
    pub history: Vec<f64>,
}

impl QStage {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }
}

/// Solve for the first derivative field, starting from zero.
pub fn solve_q1(boundary: &[(usize, f64)], tail: &TailFunction, step: f64, config: &InnerConfig) -> Result<QStage> {
    solve_qn(&[], boundary, tail, step, config)
}

/// Solve for stage `previous.len() + 1`:
///
/// `Δq + (2∇T − 2h Σ∇q_j − 2h ∇q_prev)·∇q = 0`, `q = ψ` on the boundary,
///
/// iterated on the lagged gradient `∇q_prev` from the last stage's field (or
/// zero) until the L2 change drops below the tolerance.
pub fn solve_qn(
    previous: &[ScalarField],
    boundary: &[(usize, f64)],
    tail: &TailFunction,
    step: f64,
    config: &InnerConfig,
) -> Result<QStage> {
    let mesh = *tail.mesh();
    let (tx, tz) = tail.gradient();
    let mut base_x: Vec<f64> = tx.values().iter().map(|v| 2.0 * v).collect();
    let mut base_z: Vec<f64> = tz.values().iter().map(|v| 2.0 * v).collect();
    for q in previous {
        q.check_same_mesh(tail.values())?;
        let (gx, gz) = gradient(q)?;
        for (b, g) in base_x.iter_mut().zip(gx.values()) {
            *b -= 2.0 * step * g;
        }
        for (b, g) in base_z.iter_mut().zip(gz.values()) {
            *b -= 2.0 * step * g;
        }
    }
    let mut current = previous.last().cloned().unwrap_or_else(|| ScalarField::zeros(mesh));
    let mut history = Vec::new();
    for _ in 0..config.max_iters {
        let (gx, gz) = gradient(&current)?;
        let bx = ScalarField::new(mesh, base_x.iter().zip(gx.values()).map(|(b, g)| b - 2.0 * step * g).collect())?;
        let bz = ScalarField::new(mesh, base_z.iter().zip(gz.values()).map(|(b, g)| b - 2.0 * step * g).collect())?;
        let problem = EllipticProblem { advection: Some((&bx, &bz)), ..EllipticProblem::laplace() };
        let next = assemble_elliptic(&mesh, &problem)?.apply_dirichlet(boundary)?.solve()?;
        let change = next.zip_map(&current, |a, b| a - b)?.l2_norm();
        history.push(change);
        current = next;
        if change <= config.tolerance {
            return Ok(QStage { field: current, history });
        }
    }
    Err(Error::NonConvergence {
        stage: format!("q stage {}", previous.len() + 1),
        iterations: config.max_iters,
        last: *history.last().unwrap_or(&f64::INFINITY),
        history,
    })
}

/// `v = T − h Σ q_j` and `u = e^v` for the source reached after the given stages.
pub fn reconstruct_field(stages: &[ScalarField], tail: &TailFunction, step: f64) -> Result<(ScalarField, ScalarField)> {
    let mut v = tail.values().clone();
    for q in stages {
        v = v.zip_map(q, |a, b| a - step * b)?;
    }
    let u = v.map(f64::exp)?;
    Ok((v, u))
}
