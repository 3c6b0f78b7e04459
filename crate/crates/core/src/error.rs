use thiserror::Error;

pub type Result<T> = std::result::Result<T, CsmdError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsmdError {
    #[error("coordinate {index} = {value} is outside the interior of the mirror map domain")]
    NonInteriorPoint { index: usize, value: f64 },

    #[error("no exact prox solver for mirror `{mirror}`, domain `{domain}`, regularizer `{regularizer}`")]
    UnsupportedCombination {
        mirror: String,
        domain: String,
        regularizer: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is not feasible: {0}")]
    Infeasible(String),

    #[error("rule `{0}` needs a horizon T")]
    HorizonRequired(String),

    #[error("schedule constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("step size eta_{t} = {eta} exceeds the admissible bound {limit}")]
    StepTooLarge { t: usize, eta: f64, limit: f64 },

    #[error("argument outside its domain: {0}")]
    DomainError(String),

    #[error("missing constant: {0}")]
    MissingConstant(&'static str),

    #[error("gap {gap} at t = {t} exceeds the divergence threshold")]
    NumericalDivergence { t: usize, gap: f64 },

    #[error("objective gap {gap} at t = {t} is negative beyond tolerance")]
    NegativeGap { t: usize, gap: f64 },

    #[error("iterate history was not retained for this run")]
    HistoryNotRetained,

    #[error("standard error {std_error} exceeds 20% of bound {bound}; draw more samples")]
    InsufficientSamples { std_error: f64, bound: f64 },

    #[error("need at least {needed} replications, got {got}")]
    InsufficientReplications { needed: usize, got: usize },

    #[error("gap at point {index} is not positive ({value})")]
    NonPositiveGap { index: usize, value: f64 },

    #[error("noise certifies assumption {have} but the bound requires {need}")]
    AssumptionMismatch { have: String, need: String },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CsmdError {
    fn from(e: std::io::Error) -> Self {
        CsmdError::Io(e.to_string())
    }
}
