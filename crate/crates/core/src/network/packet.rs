//! Over-the-air packets and their trace rendering.

use crate::detect::{ControlPacket, HopResponse, SessionId, TableReport};
use crate::kernel::Millis;
use crate::probe::{ProbeAck, TestBlock};
use crate::quarantine::BlacklistMsg;
use crate::routing::{Rrep, Rreq};
use crate::NodeId;

#[derive(Debug, Clone)]
pub enum Packet {
    Rreq(Rreq),
    Rrep(Rrep),
    Blacklist(BlacklistMsg),
    Control(ControlPacket),
    Routed(Routed),
}

/// A source-routed unicast packet. `path` is in travel order and
/// `path[pos]` is the node receiving this copy.
#[derive(Debug, Clone)]
pub struct Routed {
    pub path: Vec<NodeId>,
    pub pos: usize,
    pub body: Body,
}

#[derive(Debug, Clone)]
pub enum Body {
    Data { flow: usize, seq: u64, created: Millis },
    Block(TestBlock),
    Ack(ProbeAck),
    Response(HopResponse),
    TableRequest { session: SessionId },
    TableReply { session: SessionId, owner: NodeId, report: Box<TableReport> },
}

pub(crate) fn join_path(path: &[NodeId]) -> String {
    path.iter().map(NodeId::to_string).collect::<Vec<_>>().join("-")
}

impl Packet {
    pub fn kind(&self) -> &'static str {
        match self {
            Packet::Rreq(_) => "rreq",
            Packet::Rrep(_) => "rrep",
            Packet::Blacklist(_) => "blacklist",
            Packet::Control(_) => "control",
            Packet::Routed(r) => match r.body {
                Body::Data { .. } => "data",
                Body::Block(_) => "block",
                Body::Ack(_) => "ack",
                Body::Response(_) => "response",
                Body::TableRequest { .. } => "table_req",
                Body::TableReply { .. } => "table_rep",
            },
        }
    }

    /// Comma-free detail column of a trace line.
    pub fn detail(&self) -> String {
        match self {
            Packet::Rreq(r) => format!("{} {}", r.id, join_path(&r.source_route)),
            Packet::Rrep(r) => format!("{} {}", r.rreq_id, join_path(&r.route)),
            Packet::Blacklist(b) => format!("convicted {} issuer {}", b.convicted, b.issuer),
            Packet::Control(c) => format!("session {} next {}", c.session, c.id_next.map_or("-".into(), |n| n.to_string())),
            Packet::Routed(r) => match &r.body {
                Body::Data { flow, seq, .. } => format!("{flow}:{seq}"),
                Body::Block(b) => format!("{}:{}:{}", b.probe_id, b.round, b.block),
                Body::Ack(a) => format!("{}:{} blocks {}", a.probe_id, a.round, a.received_blocks),
                Body::Response(h) => format!("session {} responder {}", h.session, h.responder),
                Body::TableRequest { session } => format!("session {session}"),
                Body::TableReply { session, owner, .. } => format!("session {session} owner {owner}"),
            },
        }
    }
}

/// One delivered frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: Millis,
    pub kind: &'static str,
    pub from: NodeId,
    pub to: NodeId,
    pub detail: String,
}

impl TraceRecord {
    pub fn line(&self) -> String {
        format!("{},{},{},{},{}", self.time, self.kind, self.from, self.to, self.detail)
    }
}
