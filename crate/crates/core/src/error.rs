use thiserror::Error;

use crate::NodeId;

/// Errors raised by the event kernel and topology layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("event scheduled at {fire_time} ms but the clock is already at {now} ms")]
    PastEvent { fire_time: u64, now: u64 },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("route originator and destination are both {0}")]
    SelfRoute(NodeId),
    #[error("destination {0} is blacklisted at the originator")]
    BlacklistedDestination(NodeId),
    #[error("no route candidates to select from")]
    NoCandidates,
    #[error("route score already has a verdict after {0} rounds")]
    ScoreComplete(u8),
    #[error("route score has only {0} of 3 rounds")]
    ScoreIncomplete(u8),
}

/// Scenario configuration problems; surfaced by the CLI with exit code 2.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unsatisfiable config: {0}")]
    Unsatisfiable(String),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config io error: {0}")]
    Io(#[from] std::io::Error),
}
