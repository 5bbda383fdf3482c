use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `ε` outside `(0, 0.7)`, the range on which the K-step bound is proved.
    #[error("epsilon = {0} is outside (0, 0.7), the range of the K-step law of large numbers")]
    EpsilonOutOfRange(f64),

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: String,
    },

    #[error("N = {steps} is not divisible by K = {horizon}")]
    NotDivisible { steps: usize, horizon: usize },

    /// A Matoušek–Vondrák precondition failed; the message names it.
    #[error("lower bound domain violated: {0}")]
    LowerBoundDomain(String),

    #[error("invalid probability tree: {0}")]
    InvalidTree(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("sampler failed at trial {trial}: {reason}")]
    SamplerFailed { trial: u64, reason: String },

    #[error("tree file: {0}")]
    TreeFile(String),

    /// An inequality that must hold for every valid input did not.
    #[error("falsified: {0}")]
    Falsified(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: impl ToString, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            reason: reason.into(),
        }
    }
}
