use thiserror::Error;

use crate::cluster::ClusterError;

/// Invalid scenario, weights, thresholds or CLI-supplied parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("invalid priority thresholds: {0}")]
    PriorityThresholds(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("scenario file parse error: {0}")]
    Parse(String),
}

/// Failure while driving a simulation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invariant violated at tick {tick}: {detail}")]
    Invariant { tick: u64, detail: String },
    #[error("cluster error at tick {tick}: {source}")]
    Cluster {
        tick: u64,
        #[source]
        source: ClusterError,
    },
}

impl SimError {
    /// Invariant breaches and cluster-state errors abort a run; configuration errors are
    /// user-correctable.
    pub fn is_invariant_violation(&self) -> bool {
        !matches!(self, SimError::Config(_))
    }
}
