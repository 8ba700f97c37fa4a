use thiserror::Error;

/// Everything that can go wrong in `hens-core`.
#[derive(Debug, Error)]
pub enum HensError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dilatation parameter must be positive, got {0}")]
    NonPositiveEps(f64),

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("inconsistent structure constant for [e{i}, e{j}] component e{k}: {first} vs {second}")]
    InconsistentStructure {
        i: usize,
        j: usize,
        k: usize,
        first: f64,
        second: f64,
    },

    #[error("deformed bracket diverges as eps -> 0: c[{i}][{j}][{k}] = {value} has negative eps power")]
    LimitDiverges {
        i: usize,
        j: usize,
        k: usize,
        value: f64,
    },

    #[error("algebra is not nilpotent (BCH term of order {order} is nonzero)")]
    NotNilpotent { order: usize },

    #[error("BCH order {0} exceeds the supported maximum")]
    BchOrderTooLarge(usize),

    #[error("generators are linearly dependent")]
    DependentGenerators,

    #[error("generators do not bracket-generate: rank {rank} of {dim}")]
    NotBracketGenerating { rank: usize, dim: usize },

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("transport map does not commute with the dilatations (residual {0:e})")]
    GradingNotPreserved(f64),

    #[error("diameter {diam} exceeds 2")]
    DiameterViolation { diam: f64 },

    #[error("exact mode supports at most {max} points in total, got {got}")]
    ExactModeTooLarge { max: usize, got: usize },

    #[error("invalid pointed sample: {0}")]
    InvalidSample(String),

    #[error("profile scale mismatch: {0}")]
    ScaleMismatch(String),

    #[error("matrix is not a member of the symmetry group: {0}")]
    NotMember(String),

    #[error("d0_rep is required when D0 is nonempty")]
    MissingD0Rep,

    #[error("polynomial degree {degree} exceeds bound {bound}")]
    DegreeBoundExceeded { degree: u32, bound: u32 },

    #[error("sampler accepted {accepted} of {requested} points within budget")]
    SamplerBudget { accepted: usize, requested: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("map evaluation failed: {0}")]
    Evaluation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HensError>;
