use thiserror::Error;

/// Errors produced by the scheduling workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("network is disconnected: node {0} is unreachable from node 0")]
    Disconnected(usize),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("source and target are the same node ({0})")]
    SameNode(usize),

    #[error("action {action} is not available at node {node}")]
    InvalidAction { node: usize, action: usize },

    #[error("total event probability {0} exceeds 1 (uniformization violated)")]
    UniformizationViolated(f64),

    #[error("demand point {0} has processing rate not exceeding its arrival rate")]
    UnstableStop(usize),

    #[error("first stop of the sequence equals the server's node ({0})")]
    FirstStopAtServer(usize),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("state space of {0} states exceeds the configured limit")]
    StateSpaceTooLarge(u128),

    #[error("relative value iteration did not converge in {iterations} iterations (span {span:e})")]
    NotConverged { iterations: usize, span: f64 },

    #[error("DVO decision requested mid-commitment: {0}")]
    MidCommitment(String),

    #[error("unknown policy specification `{0}`")]
    PolicySpec(String),

    #[error("policy requires a complete graph over the demand points")]
    NotComplete,

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
