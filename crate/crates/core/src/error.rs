use thiserror::Error;

/// Errors raised by kernel validation, the simulators and the estimators.
///
/// Site indices carried by variants are 0-based; `Display` renders them
/// 1-based to match the labels used in configs and reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rate matrix must be square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("rate matrix is empty")]
    EmptyKernel,

    #[error("rate p({},{}) is negative or not finite", .i + 1, .j + 1)]
    NegativeRate { i: usize, j: usize },

    #[error("rate matrix is asymmetric: p({},{}) != p({},{})", .i + 1, .j + 1, .j + 1, .i + 1)]
    Asymmetric { i: usize, j: usize },

    #[error("diagonal rate p({},{}) must be zero", .i + 1, .i + 1)]
    NonzeroDiagonal { i: usize },

    #[error("kernel graph is disconnected (site {} unreachable from site 1)", .unreachable + 1)]
    Reducible { unreachable: usize },

    #[error("operation requires a kernel with rates in {{0,1}}")]
    NotBinaryKernel,

    #[error("alpha must be positive, got {0}")]
    NonpositiveAlpha(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown kernel family `{0}` (expected chain:n, cycle:n or complete:n)")]
    UnknownFamily(String),

    #[error("dimension mismatch: expected {expected} sites, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not on the simplex (sum {sum}, min {min})")]
    NotOnSimplex { sum: f64, min: f64 },

    #[error("total event rate is zero")]
    ZeroTotalRate,

    #[error("event budget of {budget} events exceeded")]
    EventBudgetExceeded { budget: u64 },

    #[error("state is not in the absorbing set")]
    NotAbsorbing,

    #[error("step too large: total jump rate {rate} times dt {dt} exceeds 0.1")]
    StepTooLarge { rate: f64, dt: f64 },

    #[error("at least {needed} replicas required, got {got}")]
    InsufficientReplicas { needed: usize, got: usize },

    #[error("trajectories are not condensed: only {fraction:.3} of sampled time above threshold")]
    NotCondensed { fraction: f64 },

    #[error("no usable inter-jump segments ({found} intervals)")]
    InsufficientSegments { found: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
