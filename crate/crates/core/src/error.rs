use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("domain violation evaluating `{node}` at t = {t}: {message}")]
    Domain {
        node: String,
        t: f64,
        message: String,
    },

    #[error("invalid coefficient set: {0}")]
    Coefficients(String),

    #[error("ODE integration failed: {0}")]
    Ode(String),

    #[error("step size underflow at t = {t} (stiffness suspected)")]
    Stiffness { t: f64 },

    #[error("non-finite state detected at t = {t}")]
    NonFinite { t: f64 },

    #[error("evaluation point t = {t} outside working interval [{lo}, {hi}]")]
    OutOfInterval { t: f64, lo: f64, hi: f64 },

    #[error("singular point: |mu0({t})| below threshold, kernel functions undefined")]
    SingularPoint { t: f64 },

    #[error("turning point: mu0'({t}) vanishes inside the working interval")]
    TurningPoint { t: f64 },

    #[error("finite-time breakdown at t = {t}: {message}")]
    Breakdown { t: f64, message: String },

    #[error("invalid initial data: {0}")]
    InvalidInit(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("family mismatch: expected {expected}, got {got}")]
    FamilyMismatch { expected: String, got: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
