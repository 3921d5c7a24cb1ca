//! CBR traffic generation and hop-by-hop forwarding of source-routed packets.

use super::{Body, Packet, Routed, Simulation, Timer};
use crate::kernel::Millis;
use crate::NodeId;

impl Simulation {
    pub(super) fn on_flow_tick(&mut self, f: usize) {
        let now = self.now();
        let flow = &mut self.flows[f];
        let seq = flow.next_seq;
        flow.next_seq += 1;
        flow.stats.record_sent();
        flow.buffer.push_back((seq, now));
        let interval = 1000.0 / self.cfg.traffic.rate_pps;
        let next = flow.spec.start + (flow.next_seq as f64 * interval).round() as Millis;
        let src = flow.spec.src;
        self.timer_at(next.max(now), src, Timer::FlowTick { flow: f });
        if self.flows[f].data_route.is_some() {
            self.flush_buffer(f);
        } else {
            self.ensure_discovery(f);
        }
    }

    /// Switches the flow to `route` and releases buffered packets.
    pub(super) fn install_data_route(&mut self, f: usize, route: Vec<NodeId>) {
        self.flows[f].data_route = Some(route);
        self.schedule_refresh(f);
        self.flush_buffer(f);
    }

    fn flush_buffer(&mut self, f: usize) {
        let Some(route) = self.flows[f].data_route.clone() else { return };
        while let Some((seq, created)) = self.flows[f].buffer.pop_front() {
            self.send_routed(route.clone(), Body::Data { flow: f, seq, created });
        }
    }

    /// Hands a packet from `path[0]` to `path[1]`.
    pub(super) fn send_routed(&mut self, path: Vec<NodeId>, body: Body) -> bool {
        if path.len() < 2 || self.nodes[path[0].index()].blacklist.contains(path[1]) {
            return false;
        }
        let (from, to) = (path[0], path[1]);
        self.unicast(from, to, Packet::Routed(Routed { path, pos: 1, body }))
    }

    pub(super) fn on_routed(&mut self, me: NodeId, mut r: Routed) {
        if r.path.get(r.pos) != Some(&me) {
            return;
        }
        if r.pos + 1 == r.path.len() {
            self.on_routed_arrival(me, r);
            return;
        }
        let next = r.path[r.pos + 1];
        if self.nodes[me.index()].blacklist.contains(next) {
            return;
        }
        let behavior = self.behaviors[me.index()];
        match r.body {
            Body::Data { .. } | Body::Block(_) | Body::Ack(_) => {
                if behavior.drops_data(&mut self.nodes[me.index()].rng) {
                    self.counters.data_dropped_by_attackers += 1;
                    return;
                }
            }
            Body::Response(_) if !behavior.relays_responses() => return,
            _ => {}
        }
        r.pos += 1;
        self.unicast(me, next, Packet::Routed(r));
    }

    fn on_routed_arrival(&mut self, me: NodeId, r: Routed) {
        match r.body {
            Body::Data { flow, created, .. } => {
                if self.flows[flow].spec.dst == me {
                    let delay = self.now() - created;
                    self.flows[flow].stats.record_delivery(delay);
                }
            }
            Body::Block(block) => self.on_block(me, block),
            Body::Ack(ack) => self.on_probe_ack(ack),
            Body::Response(resp) => self.on_hop_response(me, resp),
            Body::TableRequest { session } => self.on_table_request(me, session, r.path),
            Body::TableReply { session, owner, report } => self.on_table_reply(session, owner, *report),
        }
    }
}
