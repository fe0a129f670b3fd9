use thiserror::Error;

/// Errors raised anywhere in the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid extent: {0}")]
    InvalidExtent(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("field value at node {node} is not finite")]
    NonFinite { node: usize },

    #[error("boundary node {node} has no Dirichlet value")]
    MissingBoundaryValue { node: usize },

    #[error("Robin coefficient must be positive, got {0}")]
    NonPositiveRobin(f64),

    #[error("point ({x}, {z}) lies outside the mesh")]
    OutOfDomain { x: f64, z: f64 },

    #[error("linear solve failed: relative residual {residual:.3e}")]
    SolverFailure { residual: f64 },

    #[error("matrix is singular (pivot {pivot:.3e} at row {row})")]
    Singular { row: usize, pivot: f64 },

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("source at s = {s} lies inside the closed reconstruction domain")]
    SourceInDomain { s: f64 },

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("rank deficient least-squares fit ({0})")]
    RankDeficient(String),

    #[error("zero gap between consecutive sources")]
    ZeroGap,

    #[error("empty interval: {0}")]
    EmptyInterval(String),

    #[error("expected {expected} traces, got {got}")]
    TraceCount { expected: usize, got: usize },

    #[error("missing edge data: {0}")]
    MissingEdgeData(String),

    #[error("{stage} did not converge after {iterations} iterations (last criterion {last:.3e})")]
    NonConvergence {
        stage: String,
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("empty evaluation region")]
    EmptyRegion,

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("incomplete bundle: {0}")]
    IncompleteBundle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that come from the numerics rather than inputs or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverFailure { .. }
                | Error::Singular { .. }
                | Error::NonConvergence { .. }
                | Error::RankDeficient(_)
                | Error::ZeroDenominator(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
