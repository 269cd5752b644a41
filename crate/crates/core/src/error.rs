use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model or configuration parameter is out of its domain.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    /// A quantity that the theory guarantees (positivity, coefficient bounds)
    /// did not hold during computation.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("dimension mismatch: expected {expected} states, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state space of {states} states exceeds the dense-solve limit of {limit}")]
    SizeGuard { states: usize, limit: usize },

    #[error("generator system is singular")]
    Singular,

    #[error("no feasible k: every candidate exceeds the budget {budget}")]
    NoFeasibleK { budget: f64 },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by user input rather than a numerical or
    /// modeling defect.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParam { .. } | Error::SizeGuard { .. } | Error::NoFeasibleK { .. }
        )
    }
}
