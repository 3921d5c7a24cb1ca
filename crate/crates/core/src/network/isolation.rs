//! Blacklist flooding and the purge of routing state it triggers.

use super::{Packet, Simulation, Stage};
use crate::quarantine::{apply_blacklist, BlacklistMsg};
use crate::NodeId;

impl Simulation {
    /// Records a verdict by `issuer` and floods it.
    pub(super) fn convict(&mut self, issuer: NodeId, node: NodeId) {
        let Some(msg) = BlacklistMsg::new(node, issuer, self.next_session) else { return };
        self.convicted.insert(node);
        if self.log_opts.logs {
            self.logs.quarantine.push(format!("{},{},{}", self.now(), issuer, node));
        }
        self.on_blacklist(issuer, msg);
    }

    pub(super) fn on_blacklist(&mut self, me: NodeId, msg: BlacklistMsg) {
        let node = &mut self.nodes[me.index()];
        if !apply_blacklist(&mut node.blacklist, &mut node.routes, msg.convicted) {
            return;
        }
        self.counters.blacklist_transmissions += 1;
        self.broadcast(me, &Packet::Blacklist(msg));
        for f in self.flows_from(me) {
            self.react_to_conviction(f, msg.convicted);
        }
    }

    /// Source-side cleanup: drop everything that still runs through `bad`.
    fn react_to_conviction(&mut self, f: usize, bad: NodeId) {
        let flow = &mut self.flows[f];
        flow.candidates.retain(|c| !c.route.contains(&bad));
        flow.infected_queue.retain(|r| !r.contains(&bad));
        if flow.data_route.as_ref().is_some_and(|r| r.contains(&bad)) {
            flow.data_route = None;
        }
        let session_hit = flow.session.as_ref().is_some_and(|s| s.session.route().contains(&bad));
        if session_hit {
            self.close_session(f, &format!("aborted {bad} quarantined"));
        }
        if self.flows[f].stage == Stage::Probing {
            self.abort_probes_through(f, bad);
        }
        self.after_session(f);
    }
}
