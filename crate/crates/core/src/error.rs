use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("requested order {requested} exceeds the supported cap of {cap}")]
    OrderCap { requested: usize, cap: usize },

    #[error("bump nonlinearity requires a nonzero offset delta (got {0})")]
    DegenerateBump(f64),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("parameter `{0}` is set more than once")]
    DuplicateParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("jet expansion points differ: outer centered at {outer}, inner value {inner}")]
    JetCenterMismatch { outer: f64, inner: f64 },

    #[error("sigmoid `{name}` violates the sigmoidal axioms: {failed}")]
    AxiomViolation { name: String, failed: String },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("analysis window is empty after transient removal")]
    EmptyWindow,

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("custom sigmoid families cannot be serialized")]
    NotSerializable,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
