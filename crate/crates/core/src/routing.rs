//! Route request/reply packets, per-node route tables and trust-aware route
//! selection on top of source-routed AODV.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::trust::TrustLevel;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RreqId {
    pub origin: NodeId,
    pub seq: u32,
}

impl fmt::Display for RreqId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.origin, self.seq)
    }
}

/// A flooded route request. `source_route` starts at the origin and lists
/// every node that forwarded this copy; `hop_trust[i]` is how the node after
/// `source_route[i]` rated it when forwarding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rreq {
    pub id: RreqId,
    pub origin: NodeId,
    pub destination: NodeId,
    pub source_route: Vec<NodeId>,
    pub hop_trust: Vec<TrustLevel>,
}

impl Rreq {
    pub fn originate(id: RreqId, destination: NodeId) -> Result<Self, SimError> {
        if id.origin == destination {
            return Err(SimError::SelfRoute(destination));
        }
        Ok(Self {
            id,
            origin: id.origin,
            destination,
            source_route: vec![id.origin],
            hop_trust: Vec::new(),
        })
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.source_route.contains(&node)
    }

    /// Last transmitter of this copy.
    pub fn last_hop(&self) -> NodeId {
        *self.source_route.last().expect("source route starts at the origin")
    }

    /// The copy `forwarder` rebroadcasts, carrying its rating of the sender.
    pub fn forwarded_by(&self, forwarder: NodeId, sender_trust: TrustLevel) -> Self {
        let mut next = self.clone();
        next.source_route.push(forwarder);
        next.hop_trust.push(sender_trust);
        next
    }
}

/// Route reply travelling back toward the origin along `route[..=responder_index]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rrep {
    pub rreq_id: RreqId,
    pub responder: NodeId,
    pub from_destination: bool,
    /// Full claimed path origin -> destination.
    pub route: Vec<NodeId>,
    pub responder_index: usize,
    /// One label per return hop: each upstream node rates its downstream hop.
    pub trust_annotations: Vec<TrustLevel>,
}

impl Rrep {
    pub fn new(rreq_id: RreqId, responder: NodeId, route: Vec<NodeId>, from_destination: bool) -> Self {
        let responder_index = route
            .iter()
            .position(|&n| n == responder)
            .unwrap_or(route.len().saturating_sub(1));
        Self {
            rreq_id,
            responder,
            from_destination,
            route,
            responder_index,
            trust_annotations: Vec::new(),
        }
    }

    pub fn low_count(&self) -> usize {
        self.trust_annotations
            .iter()
            .filter(|&&t| t == TrustLevel::Low)
            .count()
    }

    pub fn destination(&self) -> NodeId {
        *self.route.last().expect("non-empty route")
    }

    /// Next node toward the origin after `holder`, if `holder` is on the return path.
    pub fn upstream_of(&self, holder: NodeId) -> Option<NodeId> {
        let idx = self.route[..=self.responder_index]
            .iter()
            .position(|&n| n == holder)?;
        idx.checked_sub(1).map(|i| self.route[i])
    }

    /// Downstream neighbor of `holder` on the claimed route.
    pub fn downstream_of(&self, holder: NodeId) -> Option<NodeId> {
        let idx = self.route.iter().position(|&n| n == holder)?;
        self.route.get(idx + 1).copied()
    }

    /// Stamps `holder`'s rating of its downstream hop.
    pub fn annotate(&mut self, level: TrustLevel) {
        self.trust_annotations.push(level);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteState {
    Candidate,
    TestedValid,
    Infected,
    Purged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RouteEntry {
    pub destination: NodeId,
    pub path: Vec<NodeId>,
    pub trust_summary: usize,
    pub from_destination: bool,
    state: RouteState,
}

impl RouteEntry {
    pub fn from_rrep(rrep: &Rrep) -> Self {
        Self {
            destination: rrep.destination(),
            path: rrep.route.clone(),
            trust_summary: rrep.low_count(),
            from_destination: rrep.from_destination,
            state: RouteState::Candidate,
        }
    }

    pub fn state(&self) -> RouteState {
        self.state
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.path.contains(&node)
    }

    /// Records the probe verdict. Only candidates can be judged.
    pub fn mark_tested(&mut self, valid: bool) -> bool {
        if self.state != RouteState::Candidate {
            return false;
        }
        self.state = if valid {
            RouteState::TestedValid
        } else {
            RouteState::Infected
        };
        true
    }

    pub fn purge(&mut self) {
        self.state = RouteState::Purged;
    }

    pub fn usable_for_data(&self) -> bool {
        self.state == RouteState::TestedValid
    }
}

/// Per-node route cache.
#[derive(Debug, Clone, Default)]
pub struct RouteTable {
    entries: Vec<RouteEntry>,
}

impl RouteTable {
    pub fn insert(&mut self, entry: RouteEntry) {
        self.entries.retain(|e| !(e.destination == entry.destination && e.path == entry.path));
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[RouteEntry] {
        &self.entries
    }

    /// Purges every entry through `node`; returns how many changed state.
    pub fn purge_containing(&mut self, node: NodeId) -> usize {
        let mut purged = 0;
        for e in self.entries.iter_mut().filter(|e| e.contains(node)) {
            if e.state != RouteState::Purged {
                e.purge();
                purged += 1;
            }
        }
        purged
    }

    pub fn usable(&self, destination: NodeId) -> impl Iterator<Item = &RouteEntry> {
        self.entries
            .iter()
            .filter(move |e| e.destination == destination && e.usable_for_data())
    }

    /// Drops entries for `destination` that are no longer usable.
    pub fn forget(&mut self, destination: NodeId) {
        self.entries.retain(|e| e.destination != destination);
    }
}

/// Ordering key: destination replies first, then fewer `Low` hops, then
/// shorter, then lexicographically smaller paths.
pub fn rank_key(rrep: &Rrep) -> (bool, usize, usize, &[NodeId]) {
    (!rrep.from_destination, rrep.low_count(), rrep.route.len(), &rrep.route)
}

/// Candidate indices from best to worst.
pub fn rank_candidates(candidates: &[Rrep]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| rank_key(&candidates[a]).cmp(&rank_key(&candidates[b])));
    order
}

pub fn select_route(candidates: &[Rrep]) -> Result<RouteEntry, SimError> {
    candidates
        .iter()
        .min_by(|a, b| rank_key(a).cmp(&rank_key(b)))
        .map(RouteEntry::from_rrep)
        .ok_or(SimError::NoCandidates)
}

/// A request copy as seen by the destination, with the destination's own
/// rating of the copy's last hop appended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivedRequest {
    pub path: Vec<NodeId>,
    pub hop_trust: Vec<TrustLevel>,
}

impl ArrivedRequest {
    pub fn low_count(&self) -> usize {
        self.hop_trust.iter().filter(|&&t| t == TrustLevel::Low).count()
    }
}

/// The destination's pick among arrived request copies: fewest `Low` hops,
/// then shortest, then lexicographic.
pub fn best_request(copies: &[ArrivedRequest]) -> Option<&ArrivedRequest> {
    copies
        .iter()
        .min_by(|a, b| (a.low_count(), a.path.len(), &a.path).cmp(&(b.low_count(), b.path.len(), &b.path)))
}
