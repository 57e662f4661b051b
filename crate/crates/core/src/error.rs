use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("transition matrix row {row} is not a probability vector (sum = {sum})")]
    NotStochastic { row: usize, sum: f64 },

    #[error("chain is reducible; states not communicating with state 0: {unreachable:?}")]
    Reducible { unreachable: Vec<usize> },

    #[error("{what} did not converge after {iterations} iterations (last change {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("VAR(1) is not stationary: companion spectral radius {radius}")]
    NonStationary { radius: f64 },

    #[error("state {state}: {reason}")]
    InvalidState { state: usize, reason: String },

    #[error("validity condition fails at state {state}: discounted value of output minus cost = {margin}")]
    Validity { state: usize, margin: f64 },

    #[error("discounting condition fails: kappa(M) + delta = {0} <= 0")]
    Discounting(f64),

    #[error("non-finite value at storage node {s}, state {j}")]
    NonFinite { s: usize, j: usize },

    #[error("availability {x} is below the lower bound {b}")]
    BelowLowerBound { x: f64, b: f64 },

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
