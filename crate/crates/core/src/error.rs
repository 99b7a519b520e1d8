use thiserror::Error;

/// Errors raised by the engines and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("invalid checkpoint schedule: {0}")]
    Schedule(String),

    #[error("initial point outside the phase space: {0}")]
    Domain(String),

    #[error("orbit reached a singular point at time {time} (seed {seed:?}): {what}")]
    Singular {
        time: u64,
        seed: Option<(u64, u64)>,
        what: String,
    },

    #[error("numerical policy failure: {0}")]
    Numerical(String),

    #[error("induced table extension failed at index {index}: {reason}")]
    TableExtension { index: usize, reason: String },

    #[error("dyadic input: {0}")]
    DyadicInput(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("insufficient tail mass: {0}")]
    TailMass(String),

    #[error("non-monotone input: {0}")]
    NonMonotone(String),

    #[error("target schedule violates finiteness: {0}")]
    Finiteness(String),

    #[error("continued fraction too short: {0}")]
    Depth(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
