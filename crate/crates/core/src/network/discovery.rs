//! Route discovery: request flooding with trust accounting, replies from
//! destinations, honest intermediates and attackers, and origin-side
//! candidate collection.

use super::{Packet, Simulation, Stage, Timer};
use crate::routing::{best_request, rank_candidates, ArrivedRequest, RouteEntry, Rrep, Rreq, RreqId};
use crate::NodeId;

impl Simulation {
    /// Broadcasts `rreq` from `me`, charging a delivery to every neighbor
    /// that is still expected to forward it.
    pub(super) fn transmit_rreq(&mut self, me: NodeId, rreq: Rreq) {
        let neighbors = self.topology().neighbors(me).map(<[NodeId]>::to_vec).unwrap_or_default();
        let heard = self.nodes[me.index()].heard_tx.get(&rreq.id).cloned().unwrap_or_default();
        let blacklisted: Vec<bool> = neighbors.iter().map(|&n| self.nodes[me.index()].blacklist.contains(n)).collect();
        let table = self.table_mut(me);
        for (&n, &banned) in neighbors.iter().zip(&blacklisted) {
            if rreq.contains(n) || n == rreq.destination || heard.contains(&n) || banned {
                table.touch(n);
            } else {
                table.record_delivery(n);
            }
        }
        self.counters.rreq_transmissions += 1;
        self.broadcast(me, &Packet::Rreq(rreq));
    }

    pub(super) fn on_rreq(&mut self, me: NodeId, from: NodeId, rreq: Rreq) {
        self.table_mut(me).record_overheard_forward(from);
        let node = &mut self.nodes[me.index()];
        node.heard_tx.entry(rreq.id).or_default().insert(from);
        if node.blacklist.taints(&rreq.source_route) || rreq.origin == me || rreq.contains(me) {
            return;
        }
        if rreq.destination == me {
            self.rreq_at_destination(me, from, rreq);
            return;
        }
        if !node.seen_rreq.insert(rreq.id) {
            return;
        }
        let behavior = self.behaviors[me.index()];
        if behavior.is_attacker() {
            if let Some(route) = behavior.fake_reply_route(me, &rreq) {
                if self.nodes[me.index()].fake_replied.insert(rreq.id) {
                    self.counters.fake_rreps += 1;
                    self.send_rrep_upstream(me, Rrep::new(rreq.id, me, route, false));
                }
            }
            if behavior.drops_rreq(&mut self.nodes[me.index()].rng) {
                return;
            }
        } else if self.cfg.defense && self.cfg.intermediate_replies {
            self.maybe_intermediate_reply(me, &rreq);
        }
        let level = self.table_mut(me).observe(from);
        self.transmit_rreq(me, rreq.forwarded_by(me, level));
    }

    fn rreq_at_destination(&mut self, me: NodeId, from: NodeId, rreq: Rreq) {
        if self.nodes[me.index()].dest_done.contains(&rreq.id) {
            return;
        }
        let level = self.table_mut(me).observe(from);
        let mut path = rreq.source_route;
        path.push(me);
        if !self.cfg.defense {
            // plain AODV: answer the first copy
            self.nodes[me.index()].dest_done.insert(rreq.id);
            let rrep = Rrep::new(rreq.id, me, path, true);
            self.timer_in(self.cfg.reply_delay_ms, me, Timer::SendRrep(rrep));
            return;
        }
        let mut hop_trust = rreq.hop_trust;
        hop_trust.push(level);
        let copies = self.nodes[me.index()].dest_copies.entry(rreq.id).or_default();
        let first = copies.is_empty();
        copies.push(ArrivedRequest { path, hop_trust });
        if first {
            self.timer_in(self.cfg.dest_window_ms, me, Timer::DestWindow { rreq: rreq.id });
        }
    }

    pub(super) fn on_dest_window(&mut self, me: NodeId, rreq: RreqId) {
        let node = &mut self.nodes[me.index()];
        node.dest_done.insert(rreq);
        let Some(copies) = node.dest_copies.remove(&rreq) else { return };
        let copies: Vec<ArrivedRequest> =
            copies.into_iter().filter(|c| !node.blacklist.taints(&c.path)).collect();
        if let Some(best) = best_request(&copies) {
            let rrep = Rrep::new(rreq, me, best.path.clone(), true);
            self.send_rrep_upstream(me, rrep);
        }
    }

    /// An honest node with a tested route to the destination answers on its behalf.
    fn maybe_intermediate_reply(&mut self, me: NodeId, rreq: &Rreq) {
        let node = &self.nodes[me.index()];
        let tail = node
            .routes
            .usable(rreq.destination)
            .map(|e| e.path.clone())
            .find(|p| p[0] == me && !p[1..].iter().any(|n| rreq.contains(*n)) && !node.blacklist.taints(p));
        if let Some(tail) = tail {
            let mut route = rreq.source_route.clone();
            route.extend(tail);
            let rrep = Rrep::new(rreq.id, me, route, false);
            self.timer_in(self.cfg.reply_delay_ms, me, Timer::SendRrep(rrep));
        }
    }

    pub(super) fn send_rrep_upstream(&mut self, me: NodeId, rrep: Rrep) {
        if let Some(up) = rrep.upstream_of(me) {
            if !self.nodes[me.index()].blacklist.contains(up) {
                self.unicast(me, up, Packet::Rrep(rrep));
            }
        }
    }

    pub(super) fn on_rrep(&mut self, me: NodeId, from: NodeId, mut rrep: Rrep) {
        if self.nodes[me.index()].blacklist.taints(&rrep.route) {
            return;
        }
        let on_return_path = rrep.route[..rrep.responder_index].contains(&me);
        if !on_return_path || rrep.downstream_of(me) != Some(from) {
            return;
        }
        let level = self.table_mut(me).observe(from);
        rrep.annotate(level);
        if rrep.route[0] == me {
            self.rrep_at_origin(me, rrep);
        } else {
            self.send_rrep_upstream(me, rrep);
        }
    }

    fn rrep_at_origin(&mut self, me: NodeId, rrep: Rrep) {
        self.counters.rreps_received += 1;
        let dst = rrep.destination();
        let Some(f) = self
            .flows_from(me)
            .into_iter()
            .find(|&f| self.flows[f].spec.dst == dst && self.flows[f].rreq == Some(rrep.rreq_id))
        else {
            return;
        };
        match self.flows[f].stage {
            Stage::Discovering if !self.cfg.defense => {
                let entry = RouteEntry::from_rrep(&rrep);
                self.nodes[me.index()].routes.insert(entry);
                self.flows[f].stage = Stage::Idle;
                self.install_data_route(f, rrep.route);
            }
            Stage::Discovering | Stage::Collecting => {
                let flow = &mut self.flows[f];
                if flow.candidates.iter().any(|c| c.route == rrep.route) {
                    return;
                }
                flow.candidates.push(rrep);
                if flow.stage == Stage::Discovering {
                    flow.stage = Stage::Collecting;
                    let rreq = flow.rreq.expect("collecting flows have a request");
                    self.timer_in(self.cfg.rrep_window_ms, me, Timer::RrepWindow { flow: f, rreq });
                }
            }
            _ => {}
        }
    }

    /// Starts discovery for a flow unless one is already under way.
    pub(super) fn ensure_discovery(&mut self, f: usize) {
        if self.flows[f].stage != Stage::Idle {
            return;
        }
        let src = self.flows[f].spec.src;
        let dst = self.flows[f].spec.dst;
        if self.nodes[src.index()].blacklist.contains(dst) {
            return;
        }
        let node = &mut self.nodes[src.index()];
        let id = RreqId { origin: src, seq: node.rreq_seq };
        node.rreq_seq += 1;
        node.seen_rreq.insert(id);
        let rreq = Rreq::originate(id, dst).expect("flow endpoints differ");
        let flow = &mut self.flows[f];
        flow.stage = Stage::Discovering;
        flow.rreq = Some(id);
        flow.candidates.clear();
        self.counters.discoveries += 1;
        self.timer_in(self.cfg.discovery_timeout_ms, src, Timer::DiscoveryTimeout { flow: f, rreq: id });
        self.transmit_rreq(src, rreq);
    }

    pub(super) fn on_discovery_timeout(&mut self, f: usize, rreq: RreqId) {
        let flow = &mut self.flows[f];
        if flow.stage == Stage::Discovering && flow.rreq == Some(rreq) {
            flow.stage = Stage::Idle;
            self.ensure_discovery(f);
        }
    }

    /// Candidate window closed: test every candidate route.
    pub(super) fn on_rrep_window(&mut self, f: usize, rreq: RreqId) {
        let src = self.flows[f].spec.src;
        let flow = &mut self.flows[f];
        if flow.stage != Stage::Collecting || flow.rreq != Some(rreq) {
            return;
        }
        let blacklist = &self.nodes[src.index()].blacklist;
        flow.candidates.retain(|c| !blacklist.taints(&c.route));
        if flow.candidates.is_empty() {
            flow.stage = Stage::Idle;
            self.ensure_discovery(f);
            return;
        }
        let order = rank_candidates(&flow.candidates);
        let routes: Vec<Vec<NodeId>> = order.iter().map(|&i| flow.candidates[i].route.clone()).collect();
        for &i in &order {
            let entry = RouteEntry::from_rrep(&flow.candidates[i]);
            self.nodes[src.index()].routes.insert(entry);
        }
        self.flows[f].stage = Stage::Probing;
        self.start_probes(f, routes);
    }

    pub(super) fn on_route_refresh(&mut self, f: usize, token: u64) {
        if self.flows[f].refresh_token == token {
            self.ensure_discovery(f);
        }
    }

    /// Marks a tested route in the source's route table.
    pub(super) fn record_route_state(&mut self, src: NodeId, route: &[NodeId], valid: bool) {
        let routes = &mut self.nodes[src.index()].routes;
        let dst = *route.last().expect("non-empty route");
        if let Some(mut entry) = routes.entries().iter().find(|e| e.destination == dst && e.path == route).cloned() {
            entry.mark_tested(valid);
            routes.insert(entry);
        }
    }

    pub(super) fn schedule_refresh(&mut self, f: usize) {
        let token = self.fresh_token();
        self.flows[f].refresh_token = token;
        let src = self.flows[f].spec.src;
        self.timer_in(self.cfg.route_refresh_ms, src, Timer::RouteRefresh { flow: f, token });
    }
}
