//! The protocol engine: per-node state, flow agents and event handlers for
//! discovery, route testing, detection, quarantine and data forwarding.

mod detection;
mod discovery;
mod forwarding;
mod isolation;
mod packet;
mod probing;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use packet::{Body, Packet, Routed, TraceRecord};

use crate::adversary::NodeBehavior;
use crate::config::ScenarioConfig;
use crate::detect::{DetectionSession, SessionId, TableReport};
use crate::kernel::{Event, Kernel, Millis};
use crate::metrics::TrafficStats;
use crate::probe::{ProbeId, RouteScore};
use crate::quarantine::Blacklist;
use crate::rng::{stream, Stream};
use crate::routing::{ArrivedRequest, RouteTable, Rrep, RreqId};
use crate::topology::{Radio, Topology};
use crate::trust::MonitoringTable;
use crate::NodeId;

/// Everything fixed before the first event: who is where, who lies, who talks.
#[derive(Debug, Clone)]
pub struct Setup {
    pub topology: Topology,
    pub behaviors: Vec<NodeBehavior>,
    pub flows: Vec<FlowSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlowSpec {
    pub src: NodeId,
    pub dst: NodeId,
    pub start: Millis,
}

/// Which optional records the engine keeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LogOptions {
    pub trace: bool,
    pub logs: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Logs {
    pub trace: Vec<TraceRecord>,
    /// `probe_id,route,round,ack_blocks,p_bh,verdict`
    pub probes: Vec<String>,
    /// `session,route,hop_verdicts,challenge,outcome`
    pub detections: Vec<String>,
    /// `time,issuer,convicted`
    pub quarantine: Vec<String>,
}

/// Per-phase event counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PhaseCounters {
    pub discoveries: u64,
    pub rreq_transmissions: u64,
    pub rreps_received: u64,
    pub fake_rreps: u64,
    pub probe_rounds: u64,
    pub routes_valid: u64,
    pub routes_infected: u64,
    pub sessions: u64,
    pub sessions_clean: u64,
    pub convictions_direct: u64,
    pub convictions_arbitrated: u64,
    pub arbitrations_inconclusive: u64,
    pub blacklist_transmissions: u64,
    pub data_dropped_by_attackers: u64,
}

#[derive(Debug, Clone)]
pub enum Ev {
    Deliver { from: NodeId, packet: Packet },
    Timer(Timer),
}

#[derive(Debug, Clone)]
pub enum Timer {
    FlowTick { flow: usize },
    DiscoveryTimeout { flow: usize, rreq: RreqId },
    RrepWindow { flow: usize, rreq: RreqId },
    DestWindow { rreq: RreqId },
    SendRrep(Rrep),
    ProbeDeadline { flow: usize, probe: ProbeId, round: u8 },
    AckGather { probe: ProbeId, round: u8 },
    HopDeadline { flow: usize, session: SessionId, token: u64 },
    TableDeadline { flow: usize, session: SessionId, token: u64 },
    RouteRefresh { flow: usize, token: u64 },
}

pub(crate) struct BlockTally {
    count: u16,
    route: Vec<NodeId>,
}

pub(crate) struct Node {
    table: MonitoringTable,
    routes: RouteTable,
    blacklist: Blacklist,
    rreq_seq: u32,
    seen_rreq: BTreeSet<RreqId>,
    heard_tx: BTreeMap<RreqId, BTreeSet<NodeId>>,
    fake_replied: BTreeSet<RreqId>,
    dest_copies: BTreeMap<RreqId, Vec<ArrivedRequest>>,
    dest_done: BTreeSet<RreqId>,
    block_counts: BTreeMap<(ProbeId, u8), BlockTally>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Idle,
    Discovering,
    Collecting,
    Probing,
}

pub(crate) struct ProbeRun {
    id: ProbeId,
    route: Vec<NodeId>,
    round: u8,
    score: Option<RouteScore>,
    finished: bool,
    infected: bool,
}

pub(crate) struct Arbitration {
    x: NodeId,
    y: NodeId,
    tx: Option<TableReport>,
    ty: Option<TableReport>,
    attempt: u32,
}

pub(crate) struct ActiveSession {
    session: DetectionSession,
    attempt: u32,
    token: u64,
    arbitration: Option<Arbitration>,
}

pub(crate) struct Flow {
    spec: FlowSpec,
    next_seq: u64,
    stats: TrafficStats,
    buffer: VecDeque<(u64, Millis)>,
    data_route: Option<Vec<NodeId>>,
    stage: Stage,
    rreq: Option<RreqId>,
    candidates: Vec<Rrep>,
    probes: Vec<ProbeRun>,
    infected_queue: VecDeque<Vec<NodeId>>,
    session: Option<ActiveSession>,
    refresh_token: u64,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    kernel: Kernel<Ev>,
    radio: Radio,
    nodes: Vec<Node>,
    behaviors: Vec<NodeBehavior>,
    flows: Vec<Flow>,
    challenge_rng: ChaCha8Rng,
    next_probe: ProbeId,
    next_session: SessionId,
    next_token: u64,
    probe_owner: BTreeMap<ProbeId, usize>,
    session_owner: BTreeMap<SessionId, usize>,
    convicted: BTreeSet<NodeId>,
    counters: PhaseCounters,
    log_opts: LogOptions,
    logs: Logs,
    end: Millis,
}

/// End-of-run snapshot handed to scoring.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub convicted: BTreeSet<NodeId>,
    pub traffic: TrafficStats,
    pub per_flow: Vec<TrafficStats>,
    pub counters: PhaseCounters,
    pub logs: Logs,
    pub tables_csv: String,
    pub dispatched: u64,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig, setup: Setup, log_opts: LogOptions) -> Self {
        let seed = cfg.seed;
        let n = setup.topology.len();
        let nodes = (0..n)
            .map(|i| Node {
                table: MonitoringTable::new(NodeId(i as u32)),
                routes: RouteTable::default(),
                blacklist: Blacklist::default(),
                rreq_seq: 0,
                seen_rreq: BTreeSet::new(),
                heard_tx: BTreeMap::new(),
                fake_replied: BTreeSet::new(),
                dest_copies: BTreeMap::new(),
                dest_done: BTreeSet::new(),
                block_counts: BTreeMap::new(),
                rng: stream(seed, Stream::Node(NodeId(i as u32))),
            })
            .collect();
        let mut kernel = Kernel::new();
        let end = cfg.sim_time_ms();
        let flows = setup
            .flows
            .iter()
            .enumerate()
            .map(|(i, &spec)| {
                if spec.start <= end {
                    kernel
                        .schedule(spec.start, spec.src, Ev::Timer(Timer::FlowTick { flow: i }))
                        .expect("flow start lies ahead of time zero");
                }
                Flow {
                    spec,
                    next_seq: 0,
                    stats: TrafficStats::default(),
                    buffer: VecDeque::new(),
                    data_route: None,
                    stage: Stage::Idle,
                    rreq: None,
                    candidates: Vec::new(),
                    probes: Vec::new(),
                    infected_queue: VecDeque::new(),
                    session: None,
                    refresh_token: 0,
                }
            })
            .collect();
        Self {
            radio: Radio::new(setup.topology, cfg.per_hop_delay_ms, cfg.loss_prob, seed),
            cfg: cfg.clone(),
            kernel,
            nodes,
            behaviors: setup.behaviors,
            flows,
            challenge_rng: stream(seed, Stream::Challenges),
            next_probe: 0,
            next_session: 0,
            next_token: 0,
            probe_owner: BTreeMap::new(),
            session_owner: BTreeMap::new(),
            convicted: BTreeSet::new(),
            counters: PhaseCounters::default(),
            log_opts,
            logs: Logs::default(),
            end,
        }
    }

    pub fn now(&self) -> Millis {
        self.kernel.now()
    }

    pub fn topology(&self) -> &Topology {
        self.radio.topology()
    }

    /// Advances the simulation to `t` (clamped to the configured end).
    pub fn run_until(&mut self, t: Millis) {
        let t_end = t.min(self.end).max(self.kernel.now());
        let mut any = false;
        while let Some(event) = self.kernel.pop_due(t_end) {
            any = true;
            self.dispatch(event);
        }
        self.kernel.settle(t_end, any);
    }

    pub fn run(mut self) -> SimOutcome {
        self.run_until(self.end);
        self.finish()
    }

    pub fn table(&self, node: NodeId) -> &MonitoringTable {
        &self.nodes[node.index()].table
    }

    pub fn blacklist(&self, node: NodeId) -> &Blacklist {
        &self.nodes[node.index()].blacklist
    }

    pub fn routes(&self, node: NodeId) -> &RouteTable {
        &self.nodes[node.index()].routes
    }

    pub fn convicted(&self) -> &BTreeSet<NodeId> {
        &self.convicted
    }

    pub fn counters(&self) -> &PhaseCounters {
        &self.counters
    }

    pub fn data_route(&self, flow: usize) -> Option<&[NodeId]> {
        self.flows[flow].data_route.as_deref()
    }

    pub fn logs(&self) -> &Logs {
        &self.logs
    }

    pub fn finish(self) -> SimOutcome {
        let mut traffic = TrafficStats::default();
        for f in &self.flows {
            traffic.merge(&f.stats);
        }
        let mut tables_csv = String::new();
        for node in &self.nodes {
            tables_csv.push_str(&node.table.csv_rows());
        }
        SimOutcome {
            convicted: self.convicted,
            traffic,
            per_flow: self.flows.iter().map(|f| f.stats.clone()).collect(),
            counters: self.counters,
            logs: self.logs,
            tables_csv,
            dispatched: self.kernel.dispatched(),
        }
    }

    fn dispatch(&mut self, event: Event<Ev>) {
        let me = event.target;
        match event.payload {
            Ev::Deliver { from, packet } => {
                if self.log_opts.trace {
                    self.logs.trace.push(TraceRecord {
                        time: self.now(),
                        kind: packet.kind(),
                        from,
                        to: me,
                        detail: packet.detail(),
                    });
                }
                if self.nodes[me.index()].blacklist.contains(from) {
                    return;
                }
                match packet {
                    Packet::Rreq(r) => self.on_rreq(me, from, r),
                    Packet::Rrep(r) => self.on_rrep(me, from, r),
                    Packet::Blacklist(b) => self.on_blacklist(me, b),
                    Packet::Control(c) => self.on_control(me, c),
                    Packet::Routed(r) => self.on_routed(me, r),
                }
            }
            Ev::Timer(timer) => self.on_timer(me, timer),
        }
    }

    fn on_timer(&mut self, me: NodeId, timer: Timer) {
        match timer {
            Timer::FlowTick { flow } => self.on_flow_tick(flow),
            Timer::DiscoveryTimeout { flow, rreq } => self.on_discovery_timeout(flow, rreq),
            Timer::RrepWindow { flow, rreq } => self.on_rrep_window(flow, rreq),
            Timer::DestWindow { rreq } => self.on_dest_window(me, rreq),
            Timer::SendRrep(rrep) => self.send_rrep_upstream(me, rrep),
            Timer::ProbeDeadline { flow, probe, round } => self.on_probe_deadline(flow, probe, round),
            Timer::AckGather { probe, round } => self.on_ack_gather(me, probe, round),
            Timer::HopDeadline { flow, session, token } => self.on_hop_deadline(flow, session, token),
            Timer::TableDeadline { flow, session, token } => self.on_table_deadline(flow, session, token),
            Timer::RouteRefresh { flow, token } => self.on_route_refresh(flow, token),
        }
    }

    fn timer_at(&mut self, at: Millis, node: NodeId, timer: Timer) {
        if at <= self.end {
            self.kernel
                .schedule(at, node, Ev::Timer(timer))
                .expect("timers are never scheduled in the past");
        }
    }

    fn timer_in(&mut self, delay: Millis, node: NodeId, timer: Timer) {
        let at = self.now() + delay;
        self.timer_at(at, node, timer);
    }

    fn fresh_token(&mut self) -> u64 {
        self.next_token += 1;
        self.next_token
    }

    /// Monitoring table of `node`, rolled forward to the current epoch.
    fn table_mut(&mut self, node: NodeId) -> &mut MonitoringTable {
        let now = self.kernel.now();
        let epoch = self.cfg.epoch_ms;
        let table = &mut self.nodes[node.index()].table;
        table.sync_epoch(now, epoch);
        table
    }

    fn unicast(&mut self, from: NodeId, to: NodeId, packet: Packet) -> bool {
        self.radio.unicast(&mut self.kernel, from, to, Ev::Deliver { from, packet })
    }

    fn broadcast(&mut self, from: NodeId, packet: &Packet) -> Vec<NodeId> {
        self.radio
            .broadcast(&mut self.kernel, from, |_| Ev::Deliver { from, packet: packet.clone() })
    }

    fn flows_from(&self, src: NodeId) -> Vec<usize> {
        (0..self.flows.len()).filter(|&i| self.flows[i].spec.src == src).collect()
    }
}
