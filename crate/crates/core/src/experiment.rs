//! Scenario construction, single runs, seed/ratio sweeps and CSV output.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::{assign_roles, GroundTruth};
use crate::config::ScenarioConfig;
use crate::error::ConfigError;
use crate::metrics::{score_run, ConfusionMatrix};
use crate::network::{FlowSpec, LogOptions, Logs, PhaseCounters, Setup, Simulation};
use crate::rng::{stream, Stream};
use crate::topology::Topology;
use crate::NodeId;

pub const CSV_HEADER: &str = "ratio,seed,fpr,fnr,dr,pdr,avg_delay_ms";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub malicious_ratio: f64,
    pub defense: bool,
    pub node_count: usize,
    pub malicious: Vec<NodeId>,
    pub convicted: Vec<NodeId>,
    pub scored_nodes: u32,
    pub confusion: ConfusionMatrix,
    pub fpr: f64,
    pub fnr: f64,
    pub dr: f64,
    pub pdr: Option<f64>,
    pub avg_delay_ms: Option<f64>,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub counters: PhaseCounters,
    pub events_dispatched: u64,
}

impl RunReport {
    pub fn csv_row(&self) -> String {
        csv_line(self.malicious_ratio, &self.seed.to_string(), self.fpr, self.fnr, self.dr, self.pdr, self.avg_delay_ms)
    }
}

/// A run plus its optional records.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub logs: Logs,
    pub tables_csv: String,
    pub endpoints: BTreeSet<NodeId>,
}

/// Places nodes, picks flows among all nodes and attackers among the rest.
pub fn build_setup(cfg: &ScenarioConfig) -> Result<Setup, ConfigError> {
    cfg.validate()?;
    let topology = match &cfg.positions {
        Some(ps) => Topology::from_positions(ps.clone(), cfg.range, cfg.area),
        None => Topology::place_uniform(cfg.node_count, cfg.area, cfg.range, cfg.seed),
    };
    let n = topology.len();
    let mut flow_rng = stream(cfg.seed, Stream::Flows);
    let pairs: Vec<(NodeId, NodeId)> = match &cfg.traffic.pairs {
        Some(p) => p.clone(),
        None => sample_pairs(n, cfg.traffic.flows, cfg.attackers.as_deref().unwrap_or(&[]), &mut flow_rng)?,
    };
    let jitter = cfg.traffic.start_jitter_ms;
    let flows = pairs
        .iter()
        .map(|&(src, dst)| FlowSpec { src, dst, start: if jitter > 0 { flow_rng.gen_range(0..jitter) } else { 0 } })
        .collect::<Vec<_>>();
    let endpoints: BTreeSet<NodeId> = pairs.iter().flat_map(|&(s, d)| [s, d]).collect();
    let (eligible, count) = match &cfg.attackers {
        Some(ids) => (ids.clone(), ids.len()),
        None => (
            topology.nodes().filter(|id| !endpoints.contains(id)).collect::<Vec<_>>(),
            cfg.attacker_count(),
        ),
    };
    if count > eligible.len() {
        return Err(ConfigError::Unsatisfiable(format!(
            "{count} attackers requested but only {} non-endpoint nodes exist",
            eligible.len()
        )));
    }
    let mut role_rng = stream(cfg.seed, Stream::Roles);
    let behaviors = assign_roles(&topology, &eligible, count, cfg.cooperative_pairs, &cfg.attacker, &mut role_rng);
    Ok(Setup { topology, behaviors, flows })
}

fn sample_pairs(
    n: usize,
    flows: usize,
    excluded: &[NodeId],
    rng: &mut impl Rng,
) -> Result<Vec<(NodeId, NodeId)>, ConfigError> {
    let pool: Vec<NodeId> = (0..n as u32).map(NodeId).filter(|id| !excluded.contains(id)).collect();
    if flows == 0 {
        return Ok(Vec::new());
    }
    if pool.len() < 2 {
        return Err(ConfigError::Unsatisfiable("fewer than two honest nodes for flow endpoints".into()));
    }
    if pool.len() >= 2 * flows {
        let picked: Vec<NodeId> = pool.choose_multiple(rng, 2 * flows).copied().collect();
        return Ok(picked.chunks(2).map(|c| (c[0], c[1])).collect());
    }
    Ok((0..flows)
        .map(|_| {
            let two: Vec<NodeId> = pool.choose_multiple(rng, 2).copied().collect();
            (two[0], two[1])
        })
        .collect())
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport, ConfigError> {
    run_scenario_with(cfg, LogOptions::default()).map(|o| o.report)
}

pub fn run_scenario_with(cfg: &ScenarioConfig, opts: LogOptions) -> Result<RunOutput, ConfigError> {
    let setup = build_setup(cfg)?;
    Ok(run_setup(cfg, setup, opts))
}

/// Runs a prepared setup and scores it; flow endpoints are not scored.
pub fn run_setup(cfg: &ScenarioConfig, setup: Setup, opts: LogOptions) -> RunOutput {
    let truth = GroundTruth::from_behaviors(&setup.behaviors);
    let endpoints: BTreeSet<NodeId> = setup.flows.iter().flat_map(|f| [f.src, f.dst]).collect();
    let node_count = setup.topology.len();
    let scored: Vec<NodeId> = (0..node_count as u32).map(NodeId).filter(|n| !endpoints.contains(n)).collect();
    let outcome = Simulation::new(cfg, setup, opts).run();
    let confusion = score_run(&outcome.convicted, &truth, scored.iter().copied());
    let report = RunReport {
        seed: cfg.seed,
        malicious_ratio: cfg.malicious_ratio,
        defense: cfg.defense,
        node_count,
        malicious: truth.malicious().iter().copied().collect(),
        convicted: outcome.convicted.iter().copied().collect(),
        scored_nodes: confusion.total(),
        confusion,
        fpr: confusion.fpr(),
        fnr: confusion.fnr(),
        dr: confusion.dr(),
        pdr: outcome.traffic.pdr(),
        avg_delay_ms: outcome.traffic.avg_delay(),
        data_sent: outcome.traffic.data_sent,
        data_delivered: outcome.traffic.data_delivered,
        counters: outcome.counters,
        events_dispatched: outcome.dispatched,
    };
    RunOutput { report, logs: outcome.logs, tables_csv: outcome.tables_csv, endpoints }
}

/// Parses `start:end:step` (inclusive) or a comma-separated list.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn parse_ratios(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = || ConfigError::Invalid(format!("cannot parse ratios '{spec}'"));
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let ratios = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, step] = parts.as_slice() else { return Err(bad()) };
        let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        spec.split(',').map(parse).collect::<Result<Vec<_>, _>>()?
    };
    if ratios.is_empty() || ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(bad());
    }
    Ok(ratios)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub runs: Vec<RunReport>,
    pub means: Vec<MeanRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanRow {
    pub ratio: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub dr: f64,
    pub pdr: Option<f64>,
    pub avg_delay_ms: Option<f64>,
}

/// Seeds `base.seed .. base.seed + seeds` at every ratio, in parallel.
pub fn run_sweep(base: &ScenarioConfig, ratios: &[f64], seeds: u64) -> Result<SweepResult, ConfigError> {
    let jobs: Vec<ScenarioConfig> = ratios
        .iter()
        .flat_map(|&r| {
            (0..seeds).map(move |i| ScenarioConfig { malicious_ratio: r, seed: base.seed + i, ..base.clone() })
        })
        .collect();
    for job in &jobs {
        job.validate()?;
    }
    let mut runs = jobs.par_iter().map(run_scenario).collect::<Result<Vec<_>, _>>()?;
    runs.sort_by(|a, b| a.malicious_ratio.total_cmp(&b.malicious_ratio).then(a.seed.cmp(&b.seed)));
    let means = ratios
        .iter()
        .map(|&r| {
            let group: Vec<&RunReport> = runs.iter().filter(|x| x.malicious_ratio == r).collect();
            mean_row(r, &group)
        })
        .collect();
    Ok(SweepResult { runs, means })
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn mean_row(ratio: f64, group: &[&RunReport]) -> MeanRow {
    MeanRow {
        ratio,
        fpr: mean_of(group.iter().map(|r| r.fpr)).unwrap_or(0.0),
        fnr: mean_of(group.iter().map(|r| r.fnr)).unwrap_or(0.0),
        dr: mean_of(group.iter().map(|r| r.dr)).unwrap_or(0.0),
        pdr: mean_of(group.iter().filter_map(|r| r.pdr)),
        avg_delay_ms: mean_of(group.iter().filter_map(|r| r.avg_delay_ms)),
    }
}

impl SweepResult {
    /// Header, then each ratio's seed rows followed by its mean row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for m in &self.means {
            for r in self.runs.iter().filter(|r| r.malicious_ratio == m.ratio) {
                out.push_str(&r.csv_row());
                out.push('\n');
            }
            out.push_str(&csv_line(m.ratio, "mean", m.fpr, m.fnr, m.dr, m.pdr, m.avg_delay_ms));
            out.push('\n');
        }
        out
    }
}

fn csv_line(ratio: f64, seed: &str, fpr: f64, fnr: f64, dr: f64, pdr: Option<f64>, delay: Option<f64>) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.3}"));
    format!("{ratio:.3},{seed},{fpr:.3},{fnr:.3},{dr:.3},{},{}", opt(pdr), opt(delay))
}
