//! Network-wide blacklisting of convicted nodes.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::detect::SessionId;
use crate::routing::RouteTable;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlacklistMsg {
    pub convicted: NodeId,
    pub issuer: NodeId,
    pub session: SessionId,
}

impl BlacklistMsg {
    pub fn new(convicted: NodeId, issuer: NodeId, session: SessionId) -> Option<Self> {
        (convicted != issuer).then_some(Self { convicted, issuer, session })
    }
}

/// Monotone set of convicted ids held by one node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Blacklist {
    convicted: BTreeSet<NodeId>,
}

impl Blacklist {
    /// Returns `true` the first time `node` is added.
    pub fn insert(&mut self, node: NodeId) -> bool {
        self.convicted.insert(node)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.convicted.contains(&node)
    }

    /// Any member of `path` convicted?
    pub fn taints(&self, path: &[NodeId]) -> bool {
        !self.convicted.is_empty() && path.iter().any(|n| self.convicted.contains(n))
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.convicted.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.convicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.convicted.is_empty()
    }
}

/// Records `convicted` and purges cached routes through it. Returns whether
/// the id was new at this node.
pub fn apply_blacklist(blacklist: &mut Blacklist, routes: &mut RouteTable, convicted: NodeId) -> bool {
    let fresh = blacklist.insert(convicted);
    routes.purge_containing(convicted);
    fresh
}
