//! Deterministic discrete-event simulator of an ad-hoc on-demand routing
//! network with a four-phase gray hole defense: neighbor trust monitoring,
//! route probing, challenge-response detection and blacklist quarantine.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod adversary;
pub mod config;
pub mod detect;
pub mod experiment;
pub mod error;
pub mod kernel;
pub mod layouts;
pub mod metrics;
pub mod network;
pub mod probe;
pub mod quarantine;
pub mod rng;
pub mod routing;
pub mod topology;
pub mod trust;

pub use error::{ConfigError, SimError};
pub use kernel::{Kernel, Millis, SimClock};
pub use topology::{Position, Radio, Topology};
pub use trust::{MonitoringTable, TrustLevel};

/// Node identifier, also the index into per-node arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
