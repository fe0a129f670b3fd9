use super::first_guess::{TailFunction, TailOrigin};
use crate::error::{Error, Result};
use crate::grid_fem::{assemble_elliptic, EllipticProblem, Load, ScalarField};
use crate::inversion::{RecoveryBasis, RecoveryOptions};
use crate::metrics::consecutive_diff;

/// Parameters of the relaxed fixed-point refinement of the tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceleratorConfig {
    /// Base of the geometric damping `γ^{−m}`.
    pub gamma: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    /// Cap on the exponent of the relaxation factor.
    pub exponent_cap: f64,
    /// Factor applied to coefficient differences inside the exponent, which
    /// sets the unit the difference is measured in.
    pub difference_scale: f64,
    /// Lower bound of the coefficient before every solve.
    pub floor: f64,
    /// Use the relaxation factor; when false every step uses factor one.
    pub relaxed: bool,
}

impl AcceleratorConfig {
    pub fn new(floor: f64) -> Self {
        Self {
            gamma: 1.05,
            tolerance: 1e-5,
            max_iters: 300,
            exponent_cap: 50.0,
            difference_scale: 1.0,
            floor,
            relaxed: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) || !(self.tolerance > 0.0) || self.max_iters == 0 {
            return Err(Error::Config(format!(
                "accelerator needs gamma > 1, tolerance > 0 and at least one iteration, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Pointwise relaxation factor `exp(min(π² e^{−(m−1)} Δ², cap)) / γ^m`.
pub fn relaxation_lambda(m: usize, difference: &ScalarField, gamma: f64, exponent_cap: f64) -> ScalarField {
    let decay = (-(m as f64 - 1.0)).exp() * std::f64::consts::PI.powi(2);
    let damping = gamma.powi(-(m as i32));
    difference.map(|d| (decay * d * d).min(exponent_cap).exp() * damping).expect("finite relaxation factor")
}

/// One refinement step: solve `Δp − a_cur p = λ (a_cur − a_prev) u_prev` with
/// `p = 0` on the boundary and return `u_prev + p`.
pub fn accelerator_step(
    u_prev: &ScalarField,
    a_prev: &ScalarField,
    a_cur: &ScalarField,
    lambda: &ScalarField,
) -> Result<ScalarField> {
    u_prev.check_same_mesh(a_prev)?;
    u_prev.check_same_mesh(a_cur)?;
    u_prev.check_same_mesh(lambda)?;
    let mesh = *u_prev.mesh();
    // −Δp + a p = −λ Δa u
    let source: Vec<f64> = (0..mesh.node_count())
        .map(|n| -lambda.values()[n] * (a_cur.values()[n] - a_prev.values()[n]) * u_prev.values()[n])
        .collect();
    let source = ScalarField::new(mesh, source)?;
    let problem = EllipticProblem { reaction: Some(a_cur), load: Load::Field(&source), ..EllipticProblem::laplace() };
    let zero: Vec<(usize, f64)> = mesh.boundary_nodes().into_iter().map(|b| (b, 0.0)).collect();
    let p = assemble_elliptic(&mesh, &problem)?.apply_dirichlet(&zero)?.solve()?;
    u_prev.zip_map(&p, |u, p| u + p)
}

/// One accelerator iteration as recorded in the history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceleratorRecord {
    pub iteration: usize,
    /// Consecutive difference of the coefficient; infinite for the first.
    pub criterion: f64,
    /// Coefficient nodes raised to the floor.
    pub floored: usize,
    /// Field nodes clamped before the log or the recovery.
    pub clamped: usize,
    /// Optional score supplied by the caller's monitor.
    pub score: Option<f64>,
}

/// Refined tail, the coefficient consistent with it and the iteration history.
#[derive(Debug, Clone)]
pub struct AcceleratorOutcome {
    pub tail: TailFunction,
    pub coefficient: ScalarField,
    pub history: Vec<AcceleratorRecord>,
    pub converged: bool,
    /// Numerical failure that stopped the iteration early, if any. The
    /// outcome then holds the last state before the failing step.
    pub breakdown: Option<String>,
}

impl AcceleratorOutcome {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    /// The non-convergence error of an unconverged run, carrying the
    /// criterion history.
    pub fn failure(&self) -> Option<Error> {
        if self.converged {
            return None;
        }
        let history: Vec<f64> = self.history.iter().map(|r| r.criterion).collect();
        Some(Error::NonConvergence {
            stage: match &self.breakdown {
                Some(why) => format!("tail accelerator (broke down at {why})"),
                None => "tail accelerator".into(),
            },
            iterations: self.history.len(),
            last: *history.last().unwrap_or(&f64::INFINITY),
            history,
        })
    }
}

const FIELD_FLOOR: f64 = 1e-300;

fn clamp_positive(u: &ScalarField) -> (ScalarField, usize) {
    let mut clamped = 0;
    let values = u
        .values()
        .iter()
        .map(|&v| {
            if v > FIELD_FLOOR {
                v
            } else {
                clamped += 1;
                FIELD_FLOOR
            }
        })
        .collect();
    (ScalarField::new(*u.mesh(), values).expect("clamped values are finite"), clamped)
}

/// Refine a first-guess tail against the boundary data `boundary` of the last
/// source. Returns the outcome even without convergence; check
/// [`AcceleratorOutcome::converged`] or use [`run_accelerator`].
pub fn run_accelerator_with(
    first_guess: &TailFunction,
    boundary: &[(usize, f64)],
    basis: &RecoveryBasis,
    recovery: RecoveryOptions,
    config: &AcceleratorConfig,
    mut monitor: impl FnMut(&ScalarField) -> Option<f64>,
) -> Result<AcceleratorOutcome> {
    config.validate()?;
    let mesh = *first_guess.mesh();
    if !mesh.same_grid(basis.mesh()) {
        return Err(Error::MeshMismatch("tail and recovery basis differ".into()));
    }
    let floor = |a: &ScalarField| a.map(|v| v.max(config.floor));
    let mut history = Vec::new();

    // m = 1: coefficient from the first guess, then match the measured boundary data
    let u0 = first_guess.values().map(f64::exp)?;
    let (u0, clamped) = clamp_positive(&u0);
    let rec = basis.recover(&u0, recovery)?;
    let mut a_prev = floor(&rec.coefficient)?;
    let problem = EllipticProblem { reaction: Some(&a_prev), ..EllipticProblem::laplace() };
    let mut u = assemble_elliptic(&mesh, &problem)?.apply_dirichlet(boundary)?.solve()?;
    history.push(AcceleratorRecord {
        iteration: 1,
        criterion: f64::INFINITY,
        floored: rec.floored,
        clamped,
        score: monitor(&a_prev),
    });

    let mut converged = false;
    let mut breakdown = None;
    for m in 2..=config.max_iters {
        let (u_pos, clamped) = clamp_positive(&u);
        let rec = basis.recover(&u_pos, recovery)?;
        let a_cur = floor(&rec.coefficient)?;
        let criterion = consecutive_diff(&a_cur, &a_prev)?;
        history.push(AcceleratorRecord { iteration: m, criterion, floored: rec.floored, clamped, score: monitor(&a_cur) });
        if criterion <= config.tolerance {
            a_prev = a_cur;
            converged = true;
            break;
        }
        let lambda = if config.relaxed {
            let diff = a_cur.zip_map(&a_prev, |c, p| config.difference_scale * (c - p))?;
            relaxation_lambda(m - 1, &diff, config.gamma, config.exponent_cap)
        } else {
            ScalarField::constant(mesh, 1.0)
        };
        match accelerator_step(&u, &a_prev, &a_cur, &lambda) {
            Ok(next) => u = next,
            Err(e) if e.is_numerical() => {
                breakdown = Some(format!("iteration {m}: {e}"));
                a_prev = a_cur;
                break;
            }
            Err(e) => return Err(e),
        }
        a_prev = a_cur;
    }
    let (u_pos, _) = clamp_positive(&u);
    let tail = TailFunction::new(u_pos.map(f64::ln)?, TailOrigin::Accelerated { iterations: history.len() })?;
    Ok(AcceleratorOutcome { tail, coefficient: a_prev, history, converged, breakdown })
}

/// [`run_accelerator_with`] without monitoring; non-convergence is an error
/// carrying the criterion history.
pub fn run_accelerator(
    first_guess: &TailFunction,
    boundary: &[(usize, f64)],
    basis: &RecoveryBasis,
    recovery: RecoveryOptions,
    config: &AcceleratorConfig,
) -> Result<AcceleratorOutcome> {
    let out = run_accelerator_with(first_guess, boundary, basis, recovery, config, |_| None)?;
    match out.failure() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
