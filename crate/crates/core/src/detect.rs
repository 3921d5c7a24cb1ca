//! Hop-by-hop challenge/response over infected routes.
//!
//! The source draws a fresh challenge per session and sends it down the
//! route in control packets. Every hop answers with `SHA-256(challenge)` along
//! the reverse route and hands a new control packet to the next hop. The
//! source walks the hops in order: a wrong digest convicts the responder, a
//! missing one sends the adjacent pair to monitoring-table arbitration.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::trust::MonitoringTable;
use crate::NodeId;

pub type Digest = [u8; 32];
pub type Challenge = [u8; 16];
pub type SessionId = u64;

pub fn sha256(message: &[u8]) -> Digest {
    Sha256::digest(message).into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ControlPacket {
    pub session: SessionId,
    /// Creator of this copy.
    pub node_id: NodeId,
    /// Where the receiver must pass the next copy; `None` at the destination.
    pub id_next: Option<NodeId>,
    pub challenge: Challenge,
    pub digest_field: Digest,
    pub route: Vec<NodeId>,
}

impl ControlPacket {
    /// Copy the addressee `holder` forwards, or `None` if it is the last hop.
    pub fn relay_from(&self, holder: NodeId) -> Option<(NodeId, ControlPacket)> {
        let next = self.id_next?;
        let idx = self.route.iter().position(|&n| n == next)?;
        let mut copy = self.clone();
        copy.node_id = holder;
        copy.id_next = self.route.get(idx + 1).copied();
        Some((next, copy))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HopResponse {
    pub session: SessionId,
    pub responder: NodeId,
    pub digest: Digest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionOutcome {
    Clean,
    Malicious(NodeId),
    Arbitration { x: NodeId, y: NodeId },
}

/// What the source learned about the hop under examination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopEvidence {
    Response(Digest),
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Judgement {
    Continue,
    Done(DetectionOutcome),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HopVerdict {
    Verified,
    WrongDigest,
    Silent,
}

#[derive(Debug, Clone)]
pub struct DetectionSession {
    pub id: SessionId,
    route: Vec<NodeId>,
    challenge: Challenge,
    expected: Digest,
    cursor: usize,
    responses: BTreeMap<usize, Digest>,
    hop_log: Vec<(NodeId, HopVerdict)>,
    outcome: Option<DetectionOutcome>,
}

impl DetectionSession {
    /// Opens a session with a fresh challenge. Routes need at least one hop
    /// beyond the source.
    pub fn start(id: SessionId, route: Vec<NodeId>, rng: &mut impl RngCore) -> Option<Self> {
        if route.len() < 2 {
            return None;
        }
        let mut challenge = [0u8; 16];
        rng.fill_bytes(&mut challenge);
        Some(Self {
            id,
            expected: sha256(&challenge),
            route,
            challenge,
            cursor: 1,
            responses: BTreeMap::new(),
            hop_log: Vec::new(),
            outcome: None,
        })
    }

    pub fn route(&self) -> &[NodeId] {
        &self.route
    }

    pub fn source(&self) -> NodeId {
        self.route[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.route.last().expect("route has >= 2 nodes")
    }

    pub fn challenge(&self) -> &Challenge {
        &self.challenge
    }

    pub fn expected(&self) -> &Digest {
        &self.expected
    }

    /// Index (into the route) of the hop currently awaited.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn current_hop(&self) -> NodeId {
        self.route[self.cursor]
    }

    pub fn outcome(&self) -> Option<DetectionOutcome> {
        self.outcome
    }

    pub fn hop_log(&self) -> &[(NodeId, HopVerdict)] {
        &self.hop_log
    }

    pub fn first_packet(&self) -> (NodeId, ControlPacket) {
        (
            self.route[1],
            ControlPacket {
                session: self.id,
                node_id: self.source(),
                id_next: self.route.get(2).copied(),
                challenge: self.challenge,
                digest_field: self.expected,
                route: self.route.clone(),
            },
        )
    }

    /// Stores a response; later hops may answer before earlier ones are judged.
    pub fn record_response(&mut self, response: &HopResponse) {
        if response.session != self.id {
            return;
        }
        if let Some(idx) = self.route.iter().skip(1).position(|&n| n == response.responder) {
            self.responses.entry(idx + 1).or_insert(response.digest);
        }
    }

    /// Judges hop `hop` (route index) from a response or a timeout.
    pub fn judge_hop(&mut self, hop: usize, evidence: HopEvidence) -> Judgement {
        if let Some(done) = self.outcome {
            return Judgement::Done(done);
        }
        let node = self.route[hop];
        let judgement = match evidence {
            HopEvidence::Response(d) if d == self.expected => {
                self.hop_log.push((node, HopVerdict::Verified));
                if hop + 1 == self.route.len() {
                    Judgement::Done(DetectionOutcome::Clean)
                } else {
                    self.cursor = hop + 1;
                    Judgement::Continue
                }
            }
            HopEvidence::Response(_) => {
                self.hop_log.push((node, HopVerdict::WrongDigest));
                Judgement::Done(DetectionOutcome::Malicious(node))
            }
            HopEvidence::Timeout => {
                self.hop_log.push((node, HopVerdict::Silent));
                Judgement::Done(DetectionOutcome::Arbitration {
                    x: self.route[hop - 1],
                    y: node,
                })
            }
        };
        if let Judgement::Done(o) = judgement {
            self.outcome = Some(o);
        }
        judgement
    }

    /// Judges every consecutive hop whose response is already in. Returns the
    /// hops that verified plus the terminal outcome if one was reached.
    pub fn advance(&mut self) -> (Vec<NodeId>, Option<DetectionOutcome>) {
        let mut verified = Vec::new();
        while self.outcome.is_none() {
            let Some(&digest) = self.responses.get(&self.cursor) else { break };
            let hop = self.cursor;
            match self.judge_hop(hop, HopEvidence::Response(digest)) {
                Judgement::Continue => verified.push(self.route[hop]),
                Judgement::Done(DetectionOutcome::Clean) => verified.push(self.route[hop]),
                Judgement::Done(_) => {}
            }
        }
        (verified, self.outcome)
    }

    pub fn timeout_current(&mut self) -> Judgement {
        self.judge_hop(self.cursor, HopEvidence::Timeout)
    }

    /// Replaces an arbitration outcome with its resolution.
    pub fn resolve(&mut self, convicted: NodeId) {
        self.outcome = Some(DetectionOutcome::Malicious(convicted));
    }
}

/// A monitoring table as returned on request, or the lack of one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableReport {
    Supplied(MonitoringTable),
    Refused,
}

/// Decides which of two adjacent hops `x` (upstream) and `y` (silent) is malicious.
///
/// * Refusing to hand over a table is guilt; `y` is checked first.
/// * `x` delivered requests to `y` and never heard `y` forward one: `y`.
/// * `x`'s own table shows `y` forwarding everything it was handed: `x`
///   must have blocked the exchange.
/// * Otherwise the node that failed to answer, `y`.
pub fn arbitrate(x: NodeId, report_x: &TableReport, y: NodeId, report_y: &TableReport) -> NodeId {
    let table_x = match (report_x, report_y) {
        (_, TableReport::Refused) => return y,
        (TableReport::Refused, _) => return x,
        (TableReport::Supplied(tx), TableReport::Supplied(_)) => tx,
    };
    let seen = table_x.entry(y);
    if seen.rreq_t >= 1 && seen.rreq_c == 0 {
        y
    } else if seen.rreq_c >= 1 && seen.rreq_c >= seen.rreq_t {
        x
    } else {
        y
    }
}
