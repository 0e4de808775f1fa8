use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum CngError {
    #[error("payoff factors must satisfy delta < eta < epsilon (got delta={delta}, eta={eta}, epsilon={epsilon})")]
    OrderingViolation { delta: f64, eta: f64, epsilon: f64 },

    #[error("{field} = {value} is outside its admissible range {range}")]
    RangeViolation {
        field: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("{field} has length {got}, expected {expected}")]
    ShapeMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{field}[{index}] = {value} must be strictly positive")]
    NonpositiveWeight {
        field: &'static str,
        index: usize,
        value: f64,
    },

    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(Box<CngError>),

    #[error("enumeration over {n} nodes exceeds the cap of {cap}")]
    SizeLimitExceeded { n: usize, cap: usize },

    #[error("price ratio undefined: equilibrium payoff is zero")]
    DivisionByZero,

    #[error("traffic snapshot contains no nodes")]
    EmptySnapshot,

    #[error("unknown node role '{0}'")]
    UnknownRole(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CngError>;
