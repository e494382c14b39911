use thiserror::Error;

/// Errors raised anywhere in the simulation, coupling, bound and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("horizon exceeded: requested {requested}, simulated data covers {available}")]
    HorizonExceeded { requested: f64, available: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate cycle durations: Var(tau) = 0, regression coefficient undefined")]
    DegenerateTau,

    #[error("insufficient data: got {got}, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is indefinite (eigenvalue {eigenvalue:e} below clamp threshold {threshold:e})")]
    Indefinite { eigenvalue: f64, threshold: f64 },

    #[error("closed-form parameters unavailable for {0}")]
    Unavailable(String),

    #[error("coupling mode {mode} unsupported for {model}: {reason}")]
    ModeUnsupported {
        mode: String,
        model: String,
        reason: String,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("decomposition identity violated: residual {residual:e} > tolerance {tolerance:e}")]
    IdentityViolation { residual: f64, tolerance: f64 },

    #[error("({t}, {x}) outside validity region: {reason}")]
    RegionViolation { t: f64, x: f64, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no feasible b in search bracket: min of exp(b*mu/2)*L(b) is {best:e}")]
    NoFeasibleB { best: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unknown bound: {0}")]
    UnknownBound(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("config validation error: {0}")]
    ConfigInvalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
