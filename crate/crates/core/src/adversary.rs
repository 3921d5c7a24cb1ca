//! Gray hole attacker behaviors: simple and cooperative.
//!
//! Attackers lure traffic with immediate fake route replies, then drop a
//! fraction of the data (and route requests) passing through them. Their
//! reaction to challenge packets is configurable.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::detect::{sha256, Digest};
use crate::routing::Rreq;
use crate::topology::Topology;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlReaction {
    /// No response, no forward, no monitoring table on request.
    SilentDrop,
    /// Responds with the digest of random bytes.
    WrongDigest,
    /// Forwards the challenge but never answers, and withholds its table.
    ForwardNoResponse,
    /// Behaves honestly on control traffic (drops data only).
    Comply,
    /// Answers correctly and forwards, then swallows every hop response
    /// coming back from downstream.
    SuppressDownstream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Honest,
    SimpleGrayhole,
    /// `front` is the member that fakes replies naming `partner` as next hop.
    CooperativeGrayhole { partner: NodeId, front: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeBehavior {
    pub role: Role,
    pub data_drop_prob: f64,
    pub rreq_drop_prob: f64,
    pub control_reaction: Option<ControlReaction>,
    pub fast_reply: bool,
}

/// What a node does with a control packet addressed to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlAction {
    pub respond: Option<Digest>,
    pub forward: bool,
}

impl NodeBehavior {
    pub const HONEST: NodeBehavior = NodeBehavior {
        role: Role::Honest,
        data_drop_prob: 0.0,
        rreq_drop_prob: 0.0,
        control_reaction: None,
        fast_reply: false,
    };

    pub fn grayhole(params: &AttackerParams) -> Self {
        Self {
            role: Role::SimpleGrayhole,
            data_drop_prob: params.data_drop_prob,
            rreq_drop_prob: params.rreq_drop_prob,
            control_reaction: Some(params.control_reaction),
            fast_reply: params.fast_reply,
        }
    }

    pub fn is_attacker(&self) -> bool {
        self.role != Role::Honest
    }

    /// Immediate fake reply to a route request: the path so far, then the
    /// attacker (and its partner for a cooperative front), then the destination.
    pub fn fake_reply_route(&self, me: NodeId, rreq: &Rreq) -> Option<Vec<NodeId>> {
        if !self.is_attacker() || !self.fast_reply || rreq.contains(me) || rreq.destination == me {
            return None;
        }
        let mut route = rreq.source_route.clone();
        route.push(me);
        if let Role::CooperativeGrayhole { partner, front: true } = self.role {
            if !route.contains(&partner) && partner != rreq.destination {
                route.push(partner);
            }
        }
        route.push(rreq.destination);
        Some(route)
    }

    pub fn drops_rreq(&self, rng: &mut impl Rng) -> bool {
        self.is_attacker() && bernoulli(rng, self.rreq_drop_prob)
    }

    /// Data, test blocks and probe acknowledgments.
    pub fn drops_data(&self, rng: &mut impl Rng) -> bool {
        self.is_attacker() && bernoulli(rng, self.data_drop_prob)
    }

    pub fn control_action(&self, challenge: &[u8], rng: &mut impl RngCore) -> ControlAction {
        let correct = sha256(challenge);
        match self.control_reaction {
            None | Some(ControlReaction::Comply) | Some(ControlReaction::SuppressDownstream) => {
                ControlAction { respond: Some(correct), forward: true }
            }
            Some(ControlReaction::SilentDrop) => ControlAction { respond: None, forward: false },
            Some(ControlReaction::ForwardNoResponse) => ControlAction { respond: None, forward: true },
            Some(ControlReaction::WrongDigest) => {
                let mut junk = [0u8; 16];
                rng.fill_bytes(&mut junk);
                ControlAction { respond: Some(sha256(&junk)), forward: true }
            }
        }
    }

    pub fn answers_table_requests(&self) -> bool {
        !matches!(
            self.control_reaction,
            Some(ControlReaction::SilentDrop) | Some(ControlReaction::ForwardNoResponse)
        )
    }

    /// Whether hop responses travelling upstream through this node survive it.
    pub fn relays_responses(&self) -> bool {
        self.control_reaction != Some(ControlReaction::SuppressDownstream)
    }
}

fn bernoulli(rng: &mut impl Rng, p: f64) -> bool {
    if p <= 0.0 {
        // keep one draw per decision so streams stay aligned across parameters
        let _: f64 = rng.gen();
        false
    } else {
        rng.gen::<f64>() < p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackerParams {
    pub data_drop_prob: f64,
    pub rreq_drop_prob: f64,
    pub control_reaction: ControlReaction,
    pub fast_reply: bool,
    pub cooperative_front_reaction: ControlReaction,
}

impl Default for AttackerParams {
    fn default() -> Self {
        Self {
            data_drop_prob: 0.5,
            rreq_drop_prob: 0.5,
            control_reaction: ControlReaction::SilentDrop,
            fast_reply: true,
            cooperative_front_reaction: ControlReaction::ForwardNoResponse,
        }
    }
}

/// The truly malicious ids of a run. Only scoring reads this.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    malicious: BTreeSet<NodeId>,
}

impl GroundTruth {
    pub fn new(malicious: impl IntoIterator<Item = NodeId>) -> Self {
        Self { malicious: malicious.into_iter().collect() }
    }

    pub fn from_behaviors(behaviors: &[NodeBehavior]) -> Self {
        Self::new(
            behaviors
                .iter()
                .enumerate()
                .filter(|(_, b)| b.is_attacker())
                .map(|(i, _)| NodeId(i as u32)),
        )
    }

    pub fn is_malicious(&self, node: NodeId) -> bool {
        self.malicious.contains(&node)
    }

    pub fn malicious(&self) -> &BTreeSet<NodeId> {
        &self.malicious
    }

    pub fn len(&self) -> usize {
        self.malicious.len()
    }

    pub fn is_empty(&self) -> bool {
        self.malicious.is_empty()
    }
}

/// Samples `count` attackers from `eligible` and pairs up to
/// `cooperative_pairs` adjacent attackers. Returns one behavior per node.
pub fn assign_roles(
    topology: &Topology,
    eligible: &[NodeId],
    count: usize,
    cooperative_pairs: usize,
    params: &AttackerParams,
    rng: &mut impl Rng,
) -> Vec<NodeBehavior> {
    let mut behaviors = vec![NodeBehavior::HONEST; topology.len()];
    let mut picked: Vec<NodeId> = eligible.choose_multiple(rng, count).copied().collect();
    picked.sort();
    for &m in &picked {
        behaviors[m.index()] = NodeBehavior::grayhole(params);
    }
    let mut paired = BTreeSet::new();
    let mut pairs = 0;
    for (i, &a) in picked.iter().enumerate() {
        if pairs == cooperative_pairs {
            break;
        }
        if paired.contains(&a) {
            continue;
        }
        let partner = picked[i + 1..]
            .iter()
            .copied()
            .find(|b| !paired.contains(b) && topology.are_neighbors(a, *b));
        if let Some(b) = partner {
            paired.insert(a);
            paired.insert(b);
            pairs += 1;
            let front = &mut behaviors[a.index()];
            front.role = Role::CooperativeGrayhole { partner: b, front: true };
            front.control_reaction = Some(params.cooperative_front_reaction);
            behaviors[b.index()].role = Role::CooperativeGrayhole { partner: a, front: false };
        }
    }
    behaviors
}
