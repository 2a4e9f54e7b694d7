use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid {name} = {value}: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("collaboration scale K = {k} does not match {count} collaborative agents")]
    Inconsistent { k: usize, count: usize },
    #[error("collaborative agent has no admissible compression/power decision")]
    MissingBsDecision,
}

impl ModelError {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        ModelError::Domain { name, value, reason }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("bisection for {what} did not converge in {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },
    #[error("feasible compression region is empty")]
    EmptyRegion,
    #[error("exhaustive enumeration refused: {n} agents exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
    #[error("encoding results: {0}")]
    Json(#[from] serde_json::Error),
}
