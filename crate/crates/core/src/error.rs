use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value {value} from node `{node}` at x = {x}")]
    NonFinite { node: String, x: f64, value: f64 },

    #[error("grid has {have} points, need at least {need} ({what})")]
    GridTooSmall { have: usize, need: usize, what: String },

    #[error("grid spacing mismatch: {0} vs {1}")]
    SpacingMismatch(f64, f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("support escapes the grid box: required {required}, available {available}")]
    SupportEscapes { required: String, available: String },

    #[error("flow left the admissible region at t = {t}, x = {x}")]
    FlowEscaped { t: f64, x: f64 },

    #[error("submanifold {{0}} is not invariant: a(0) = {0}")]
    NotInvariant(f64),

    #[error("chart map is not injective on the window with eps = {eps}; try a smaller eps")]
    NotInjective { eps: f64 },

    #[error("cutoff is not identically 1 on the declared set: |chi - 1| = {defect} at b = {at}")]
    CutoffNotUnity { defect: f64, at: f64 },

    #[error("measured vanishing order {measured:.3} is below the required {required:.3}")]
    OrderGate { measured: f64, required: f64 },

    #[error("function is not flat at the submanifold (measured order {measured:.3})")]
    NotFlat { measured: f64 },

    #[error("difference quotient of order {gamma:?} is unbounded near the submanifold (at x = {x}, ratio {ratio:.3e})")]
    Unbounded { gamma: (usize, usize), x: f64, ratio: f64 },

    #[error("coefficient overflow with J = {j}; lower J")]
    CoefficientOverflow { j: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
