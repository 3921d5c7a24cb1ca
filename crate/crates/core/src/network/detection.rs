//! Hop-by-hop challenge-response sessions over infected routes, with
//! monitoring-table arbitration when a hop stays silent.

use super::{ActiveSession, Arbitration, Body, Packet, Simulation, Stage, Timer};
use crate::detect::{arbitrate, ControlPacket, DetectionOutcome, DetectionSession, HopResponse, SessionId, TableReport};
use crate::NodeId;

impl Simulation {
    /// Opens a session on the next queued infected route, if idle.
    pub(super) fn start_next_session(&mut self, f: usize) {
        if self.flows[f].session.is_some() {
            return;
        }
        let src = self.flows[f].spec.src;
        while let Some(route) = self.flows[f].infected_queue.pop_front() {
            if self.nodes[src.index()].blacklist.taints(&route) {
                continue;
            }
            let id = self.next_session;
            let Some(session) = DetectionSession::start(id, route, &mut self.challenge_rng) else { continue };
            self.next_session += 1;
            self.session_owner.insert(id, f);
            self.counters.sessions += 1;
            self.flows[f].session = Some(ActiveSession { session, attempt: 0, token: 0, arbitration: None });
            self.send_challenge(f);
            return;
        }
    }

    /// (Re)sends the control packet from the source and arms the hop deadline.
    fn send_challenge(&mut self, f: usize) {
        let active = self.flows[f].session.as_ref().expect("active session");
        let (to, packet) = active.session.first_packet();
        let src = active.session.source();
        if !self.nodes[src.index()].blacklist.contains(to) {
            self.unicast(src, to, Packet::Control(packet));
        }
        self.arm_hop_deadline(f);
    }

    fn arm_hop_deadline(&mut self, f: usize) {
        let token = self.fresh_token();
        let active = self.flows[f].session.as_mut().expect("active session");
        active.token = token;
        let hop = active.session.cursor() as u64;
        let (src, id) = (active.session.source(), active.session.id);
        let wait = 2 * hop * self.cfg.per_hop_delay_ms + self.cfg.probe_margin_ms;
        self.timer_in(wait, src, Timer::HopDeadline { flow: f, session: id, token });
    }

    pub(super) fn on_control(&mut self, me: NodeId, packet: ControlPacket) {
        let Some(idx) = packet.route.iter().position(|&n| n == me) else { return };
        if idx == 0 {
            return;
        }
        let behavior = self.behaviors[me.index()];
        let action = behavior.control_action(&packet.challenge, &mut self.nodes[me.index()].rng);
        if let Some(digest) = action.respond {
            let mut back: Vec<NodeId> = packet.route[..=idx].to_vec();
            back.reverse();
            let resp = HopResponse { session: packet.session, responder: me, digest };
            self.send_routed(back, Body::Response(resp));
        }
        if action.forward {
            if let Some((next, relayed)) = packet.relay_from(me) {
                if !self.nodes[me.index()].blacklist.contains(next) {
                    self.unicast(me, next, Packet::Control(relayed));
                }
            }
        }
    }

    pub(super) fn on_hop_response(&mut self, me: NodeId, resp: HopResponse) {
        let Some(&f) = self.session_owner.get(&resp.session) else { return };
        let Some(active) = self.flows[f].session.as_mut() else { return };
        if active.session.id != resp.session || active.session.source() != me || active.arbitration.is_some() {
            return;
        }
        let before = active.session.cursor();
        active.session.record_response(&resp);
        let (_, outcome) = active.session.advance();
        match outcome {
            Some(o) => self.conclude_session(f, o),
            None if active.session.cursor() != before => {
                active.attempt = 0;
                self.arm_hop_deadline(f);
            }
            None => {}
        }
    }

    pub(super) fn on_hop_deadline(&mut self, f: usize, session: SessionId, token: u64) {
        let retries = self.cfg.control_retries;
        let Some(active) = self.flows[f].session.as_mut() else { return };
        if active.session.id != session || active.token != token || active.arbitration.is_some() {
            return;
        }
        if active.attempt < retries {
            active.attempt += 1;
            self.send_challenge(f);
            return;
        }
        active.session.timeout_current();
        let outcome = active.session.outcome().expect("timeout ends the session");
        self.conclude_session(f, outcome);
    }

    fn conclude_session(&mut self, f: usize, outcome: DetectionOutcome) {
        match outcome {
            DetectionOutcome::Clean => {
                self.counters.sessions_clean += 1;
                self.close_session(f, "clean");
            }
            DetectionOutcome::Malicious(node) => {
                self.counters.convictions_direct += 1;
                let issuer = self.flows[f].spec.src;
                self.close_session(f, &format!("malicious {node}"));
                self.convict(issuer, node);
            }
            DetectionOutcome::Arbitration { x, y } => self.open_arbitration(f, x, y),
        }
        self.after_session(f);
    }

    fn open_arbitration(&mut self, f: usize, x: NodeId, y: NodeId) {
        let (src, dst) = (self.flows[f].spec.src, self.flows[f].spec.dst);
        let trusted = |n: NodeId| n == src || n == dst;
        let direct = match (trusted(x), trusted(y)) {
            (true, true) => {
                self.counters.arbitrations_inconclusive += 1;
                self.close_session(f, &format!("inconclusive {x} {y}"));
                return;
            }
            (true, false) => Some(y),
            (false, true) => Some(x),
            (false, false) if self.nodes[src.index()].blacklist.contains(y) => Some(y),
            (false, false) => None,
        };
        if let Some(node) = direct {
            self.counters.convictions_arbitrated += 1;
            self.close_session(f, &format!("arbitrated {node} between {x} {y}"));
            self.convict(src, node);
            return;
        }
        let active = self.flows[f].session.as_mut().expect("active session");
        active.arbitration = Some(Arbitration { x, y, tx: None, ty: None, attempt: 0 });
        self.request_tables(f);
    }

    fn request_tables(&mut self, f: usize) {
        let token = self.fresh_token();
        let active = self.flows[f].session.as_mut().expect("active session");
        active.token = token;
        let arb = active.arbitration.as_ref().expect("arbitration open");
        let route = active.session.route().to_vec();
        let id = active.session.id;
        let mut wanted = Vec::new();
        if arb.tx.is_none() {
            wanted.push(arb.x);
        }
        if arb.ty.is_none() {
            wanted.push(arb.y);
        }
        let mut furthest = 0;
        for target in wanted {
            let idx = route.iter().position(|&n| n == target).expect("arbitrated hops lie on the route");
            furthest = furthest.max(idx as u64);
            self.send_routed(route[..=idx].to_vec(), Body::TableRequest { session: id });
        }
        let wait = 2 * furthest * self.cfg.per_hop_delay_ms + self.cfg.probe_margin_ms;
        self.timer_in(wait, route[0], Timer::TableDeadline { flow: f, session: id, token });
    }

    pub(super) fn on_table_request(&mut self, me: NodeId, session: SessionId, path: Vec<NodeId>) {
        if !self.behaviors[me.index()].answers_table_requests() {
            return;
        }
        let table = self.table_mut(me).clone();
        let mut back = path;
        back.reverse();
        let report = Box::new(TableReport::Supplied(table));
        self.send_routed(back, Body::TableReply { session, owner: me, report });
    }

    pub(super) fn on_table_reply(&mut self, session: SessionId, owner: NodeId, report: TableReport) {
        let Some(&f) = self.session_owner.get(&session) else { return };
        let Some(active) = self.flows[f].session.as_mut() else { return };
        if active.session.id != session {
            return;
        }
        let Some(arb) = active.arbitration.as_mut() else { return };
        if owner == arb.x {
            arb.tx.get_or_insert(report);
        } else if owner == arb.y {
            arb.ty.get_or_insert(report);
        }
        if arb.tx.is_some() && arb.ty.is_some() {
            self.decide_arbitration(f);
        }
    }

    pub(super) fn on_table_deadline(&mut self, f: usize, session: SessionId, token: u64) {
        let retries = self.cfg.control_retries;
        let Some(active) = self.flows[f].session.as_mut() else { return };
        if active.session.id != session || active.token != token {
            return;
        }
        let Some(arb) = active.arbitration.as_mut() else { return };
        if arb.attempt < retries {
            arb.attempt += 1;
            self.request_tables(f);
            return;
        }
        arb.tx.get_or_insert(TableReport::Refused);
        arb.ty.get_or_insert(TableReport::Refused);
        self.decide_arbitration(f);
    }

    fn decide_arbitration(&mut self, f: usize) {
        let active = self.flows[f].session.as_mut().expect("active session");
        let arb = active.arbitration.take().expect("arbitration open");
        let (tx, ty) = (arb.tx.expect("x report"), arb.ty.expect("y report"));
        let node = arbitrate(arb.x, &tx, arb.y, &ty);
        active.session.resolve(node);
        self.counters.convictions_arbitrated += 1;
        let refused = |r: &TableReport| if matches!(r, TableReport::Refused) { "refused" } else { "supplied" };
        let note = format!("arbitrated {node} between {} ({}) {} ({})", arb.x, refused(&tx), arb.y, refused(&ty));
        self.close_session(f, &note);
        let issuer = self.flows[f].spec.src;
        self.convict(issuer, node);
        self.after_session(f);
    }

    /// Takes the active session out of the flow and logs how it ended.
    pub(super) fn close_session(&mut self, f: usize, outcome: &str) {
        let Some(active) = self.flows[f].session.take() else { return };
        let s = &active.session;
        self.session_owner.remove(&s.id);
        if self.log_opts.logs {
            let hops: Vec<String> = s.hop_log().iter().map(|(n, v)| format!("{n}:{v:?}")).collect();
            self.logs.detections.push(format!(
                "{},{},{},{},{}",
                s.id,
                super::packet::join_path(s.route()),
                hops.join(" "),
                hex::encode(s.challenge()),
                outcome
            ));
        }
    }

    /// Moves on once a session is gone: next infected route, or rediscovery.
    pub(super) fn after_session(&mut self, f: usize) {
        if self.flows[f].session.is_some() {
            return;
        }
        self.start_next_session(f);
        let flow = &self.flows[f];
        if flow.session.is_none() && flow.data_route.is_none() && flow.stage == Stage::Idle {
            self.ensure_discovery(f);
        }
    }
}
