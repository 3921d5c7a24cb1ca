//! Route testing: multi-block probe rounds, destination-side block counting
//! and acknowledgment, source-side scoring.

use super::{BlockTally, Body, ProbeRun, Simulation, Stage, Timer};
use crate::probe::{ProbeAck, ProbeId, RoundResult, RouteScore, TestBlock, Verdict, TOTAL_ROUNDS};
use crate::NodeId;

impl Simulation {
    pub(super) fn start_probes(&mut self, f: usize, routes: Vec<Vec<NodeId>>) {
        self.flows[f].probes.clear();
        for route in routes {
            let id = self.next_probe;
            self.next_probe += 1;
            self.probe_owner.insert(id, f);
            self.flows[f].probes.push(ProbeRun { id, route, round: 0, score: None, finished: false, infected: false });
        }
        for i in 0..self.flows[f].probes.len() {
            self.send_probe_round(f, i);
        }
    }

    fn send_probe_round(&mut self, f: usize, i: usize) {
        let run = &self.flows[f].probes[i];
        let (id, round, route) = (run.id, run.round, run.route.clone());
        let n_blocks = self.cfg.n_blocks;
        self.counters.probe_rounds += 1;
        for block in 0..n_blocks {
            let tb = TestBlock { probe_id: id, round, block, n_blocks, route: route.clone() };
            self.send_routed(route.clone(), Body::Block(tb));
        }
        let hops = (route.len() - 1) as u64;
        let wait = 2 * hops * self.cfg.per_hop_delay_ms + self.cfg.ack_gather_ms + self.cfg.probe_margin_ms;
        self.timer_in(wait, route[0], Timer::ProbeDeadline { flow: f, probe: id, round });
    }

    pub(super) fn on_block(&mut self, me: NodeId, block: TestBlock) {
        let key = (block.probe_id, block.round);
        let node = &mut self.nodes[me.index()];
        let tally = node.block_counts.entry(key).or_insert(BlockTally { count: 0, route: block.route });
        tally.count += 1;
        if tally.count == 1 {
            let (probe, round) = key;
            self.timer_in(self.cfg.ack_gather_ms, me, Timer::AckGather { probe, round });
        }
    }

    pub(super) fn on_ack_gather(&mut self, me: NodeId, probe: ProbeId, round: u8) {
        let Some(tally) = self.nodes[me.index()].block_counts.remove(&(probe, round)) else { return };
        let mut back = tally.route;
        back.reverse();
        let ack = ProbeAck { probe_id: probe, round, received_blocks: tally.count };
        self.send_routed(back, Body::Ack(ack));
    }

    pub(super) fn on_probe_ack(&mut self, ack: ProbeAck) {
        if let Some(&f) = self.probe_owner.get(&ack.probe_id) {
            self.judge_probe_round(f, ack.probe_id, ack.round, Some(ack.received_blocks));
        }
    }

    pub(super) fn on_probe_deadline(&mut self, f: usize, probe: ProbeId, round: u8) {
        self.judge_probe_round(f, probe, round, None);
    }

    fn judge_probe_round(&mut self, f: usize, probe: ProbeId, round: u8, ack: Option<u16>) {
        let Some(i) = self.flows[f].probes.iter().position(|p| p.id == probe) else { return };
        let n_blocks = self.cfg.n_blocks;
        let run = &mut self.flows[f].probes[i];
        if run.finished || run.round != round {
            return;
        }
        let result = RoundResult::judge(ack, n_blocks);
        match run.score.as_mut() {
            None => run.score = Some(RouteScore::initialize(probe, result)),
            Some(score) => score.update(result).expect("rounds are capped before the verdict"),
        }
        let score = run.score.as_ref().expect("just set");
        if self.log_opts.logs {
            let line = format!(
                "{},{},{},{},{},{:?}",
                probe,
                super::packet::join_path(&run.route),
                round,
                ack.map_or("-".into(), |n| n.to_string()),
                score.p_bh(),
                score.verdict()
            );
            self.logs.probes.push(line);
        }
        if score.rounds_done() < TOTAL_ROUNDS {
            run.round += 1;
            self.send_probe_round(f, i);
            return;
        }
        run.finished = true;
        run.infected = score.verdict() == Verdict::Infected;
        if self.flows[f].probes.iter().all(|p| p.finished) {
            self.finish_probing(f);
        }
    }

    /// Drops probes through `node`; they count as neither valid nor infected.
    pub(super) fn abort_probes_through(&mut self, f: usize, node: NodeId) {
        let mut any = false;
        for run in self.flows[f].probes.iter_mut().filter(|p| !p.finished && p.route.contains(&node)) {
            run.finished = true;
            run.infected = false;
            run.score = None;
            any = true;
        }
        if any && self.flows[f].stage == Stage::Probing && self.flows[f].probes.iter().all(|p| p.finished) {
            self.finish_probing(f);
        }
    }

    fn finish_probing(&mut self, f: usize) {
        let src = self.flows[f].spec.src;
        let runs = std::mem::take(&mut self.flows[f].probes);
        let mut best_valid = None;
        for run in &runs {
            let Some(score) = &run.score else { continue };
            let valid = score.verdict() == Verdict::Valid;
            self.record_route_state(src, &run.route, valid);
            if valid {
                self.counters.routes_valid += 1;
                best_valid.get_or_insert_with(|| run.route.clone());
            } else {
                self.counters.routes_infected += 1;
                self.flows[f].infected_queue.push_back(run.route.clone());
            }
        }
        for run in &runs {
            self.probe_owner.remove(&run.id);
        }
        self.flows[f].stage = Stage::Idle;
        self.flows[f].candidates.clear();
        match best_valid {
            Some(route) => self.install_data_route(f, route),
            None if self.flows[f].data_route.is_some() => self.schedule_refresh(f),
            None => {}
        }
        self.start_next_session(f);
        if self.flows[f].data_route.is_none() && self.flows[f].session.is_none() {
            self.ensure_discovery(f);
        }
    }
}
