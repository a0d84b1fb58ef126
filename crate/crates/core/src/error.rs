use thiserror::Error;

/// Errors raised while validating or executing a simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {constraint}")]
    Invalid { field: String, constraint: String },

    #[error("composition cannot be represented with {n} agents: {reason}")]
    Composition { n: usize, reason: String },

    #[error("run budget exceeded: {runs} runs requested, budget allows fewer than {budget}")]
    Budget { runs: u64, budget: u64 },

    #[error("unknown sweep path `{0}`")]
    SweepPath(String),

    #[error("sweep value for `{path}` has the wrong type: {reason}")]
    SweepValue { path: String, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
