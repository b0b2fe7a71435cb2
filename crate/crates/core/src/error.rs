use thiserror::Error;

/// Errors raised by the design, tracing and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("channel crossover must lie in [0, 0.5), got {0}")]
    InvalidCrossover(f64),

    #[error("invalid observation model: {0}")]
    InvalidModel(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("mixture weights must be nonnegative and sum to 1 (sum = {0})")]
    WeightSum(f64),

    #[error("length mismatch: {0} points vs {1} weights")]
    LengthMismatch(usize, usize),

    #[error("operating point ({pfa}, {pd}) is on the diagonal after the channel; the expression is singular")]
    Singular { pfa: f64, pd: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} is not unimodal on the search bracket ({sign_changes} slope sign changes)")]
    NotUnimodal {
        what: &'static str,
        sign_changes: usize,
    },

    #[error("sensor {index}: {source}")]
    Sensor {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Structural failures come from the solver's shape assumptions rather
    /// than from bad input values.
    pub fn is_structural(&self) -> bool {
        match self {
            Error::NotUnimodal { .. } => true,
            Error::Sensor { source, .. } => source.is_structural(),
            _ => false,
        }
    }

    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
