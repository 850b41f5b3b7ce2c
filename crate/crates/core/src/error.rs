use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field does not belong to this mesh (expected {expected} nodes, got {got})")]
    MeshMismatch { expected: usize, got: usize },

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("matrix is not positive definite at row {0}")]
    NotPositiveDefinite(usize),

    #[error("value {value} outside the admissible range ({lo}, {hi})")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("could not construct a supersolution at s = {s} after {doublings} doublings")]
    BracketFailure { s: f64, doublings: usize },

    #[error("upward and downward iterations disagree by {gap:.3e} at s = {s}")]
    UniquenessViolation { s: f64, gap: f64 },

    #[error("auxiliary solve failed at s = {s}: {source}")]
    SampleFailure {
        s: f64,
        #[source]
        source: Box<AtlasError>,
    },

    #[error("Q table is not monotone (violation between samples {0} and {1})")]
    NotMonotone(usize, usize),

    #[error("refinement budget exhausted: {0}")]
    RefinementExhausted(String),

    #[error("g-mismatch: |g(u) - alpha| = {mismatch:.3e} at alpha = {alpha}")]
    GMismatch { alpha: f64, mismatch: f64 },

    #[error("no multiplicity gap: m = {m} is not below M = {big_m}")]
    NoMultiplicityGap { m: f64, big_m: f64 },

    #[error("functional of the Laplacian requires the precomputed -Δu")]
    MissingLaplacian,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AtlasError>;

impl AtlasError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        AtlasError::InvalidParameter(msg.into())
    }
}
