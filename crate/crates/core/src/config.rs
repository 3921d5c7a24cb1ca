//! Scenario configuration: JSON-backed, with defaults for every field and
//! four presets matching the evaluation scenarios.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversary::AttackerParams;
use crate::error::ConfigError;
use crate::kernel::Millis;
use crate::topology::Position;
use crate::NodeId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Number of CBR flows between randomly chosen honest endpoints.
    pub flows: usize,
    pub rate_pps: f64,
    pub packet_size: u32,
    /// Explicit (source, destination) pairs; overrides `flows` when set.
    pub pairs: Option<Vec<(NodeId, NodeId)>>,
    /// Flow start times are drawn uniformly from `[0, start_jitter_ms)`.
    pub start_jitter_ms: Millis,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self { flows: 10, rate_pps: 4.0, packet_size: 256, pairs: None, start_jitter_ms: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub node_count: usize,
    pub area: (f64, f64),
    pub range: f64,
    pub malicious_ratio: f64,
    /// Adjacent attacker pairs turned into colluding M1/M2 pairs.
    pub cooperative_pairs: usize,
    pub sim_time_s: f64,
    pub seed: u64,
    pub traffic: TrafficConfig,
    pub defense: bool,
    pub per_hop_delay_ms: Millis,
    /// Extra delay before an honest node emits a route reply.
    pub reply_delay_ms: Millis,
    pub loss_prob: f64,
    pub epoch_ms: Millis,
    pub rrep_window_ms: Millis,
    pub dest_window_ms: Millis,
    pub n_blocks: u16,
    pub probe_margin_ms: Millis,
    pub ack_gather_ms: Millis,
    pub control_retries: u32,
    pub discovery_timeout_ms: Millis,
    pub route_refresh_ms: Millis,
    /// Honest intermediates with a tested route may answer requests.
    pub intermediate_replies: bool,
    pub attacker: AttackerParams,
    /// Fixed node positions; replaces uniform placement and `node_count`.
    pub positions: Option<Vec<Position>>,
    /// Fixed attacker ids; replaces seeded sampling.
    pub attackers: Option<Vec<NodeId>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            node_count: 100,
            area: (60.0, 60.0),
            range: 50.0,
            malicious_ratio: 0.08,
            cooperative_pairs: 0,
            sim_time_s: 500.0,
            seed: 1,
            traffic: TrafficConfig::default(),
            defense: true,
            per_hop_delay_ms: 2,
            reply_delay_ms: 1,
            loss_prob: 0.0,
            epoch_ms: 100,
            rrep_window_ms: 200,
            dest_window_ms: 20,
            n_blocks: 10,
            probe_margin_ms: 20,
            ack_gather_ms: 5,
            control_retries: 2,
            discovery_timeout_ms: 1000,
            route_refresh_ms: 30_000,
            intermediate_replies: true,
            attacker: AttackerParams::default(),
            positions: None,
            attackers: None,
        }
    }
}

impl ScenarioConfig {
    /// Scenario presets 1..=4. Preset 4 is the sweep scenario; its ratio
    /// here is the sweep's upper end.
    pub fn preset(n: u8) -> Option<Self> {
        let (ratio, side, secs) = match n {
            1 => (0.08, 60.0, 500.0),
            2 => (0.16, 70.0, 1000.0),
            3 => (0.24, 80.0, 1500.0),
            4 => (0.30, 90.0, 2000.0),
            _ => return None,
        };
        Some(Self { malicious_ratio: ratio, area: (side, side), sim_time_s: secs, ..Self::default() })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn nodes(&self) -> usize {
        self.positions.as_ref().map_or(self.node_count, Vec::len)
    }

    pub fn sim_time_ms(&self) -> Millis {
        (self.sim_time_s * 1000.0).round() as Millis
    }

    /// Attacker count implied by the ratio (ignored when `attackers` is set).
    pub fn attacker_count(&self) -> usize {
        match &self.attackers {
            Some(ids) => ids.len(),
            None => (self.malicious_ratio * self.nodes() as f64).round() as usize,
        }
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let n = self.nodes();
        if n < 2 {
            return bad("node_count must be at least 2");
        }
        if !(self.area.0 > 0.0 && self.area.1 > 0.0) {
            return bad("area dimensions must be positive");
        }
        if !(self.range > 0.0) {
            return bad("range must be positive");
        }
        if !(0.0..=1.0).contains(&self.malicious_ratio) {
            return bad("malicious_ratio must lie in [0, 1]");
        }
        for (name, p) in [
            ("loss_prob", self.loss_prob),
            ("attacker.data_drop_prob", self.attacker.data_drop_prob),
            ("attacker.rreq_drop_prob", self.attacker.rreq_drop_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::Invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.sim_time_s > 0.0) {
            return bad("sim_time_s must be positive");
        }
        let timeouts = [
            self.per_hop_delay_ms,
            self.epoch_ms,
            self.rrep_window_ms,
            self.dest_window_ms,
            self.probe_margin_ms,
            self.ack_gather_ms,
            self.discovery_timeout_ms,
            self.route_refresh_ms,
        ];
        if timeouts.contains(&0) {
            return bad("all delays and timeouts must be positive");
        }
        if self.n_blocks == 0 {
            return bad("n_blocks must be at least 1");
        }
        if !(self.traffic.rate_pps > 0.0) {
            return bad("traffic.rate_pps must be positive");
        }
        if let Some(ps) = &self.positions {
            if ps.iter().any(|p| !(0.0..=self.area.0).contains(&p.x) || !(0.0..=self.area.1).contains(&p.y)) {
                return bad("every position must lie inside the area");
            }
        }
        let in_range = |id: &NodeId| id.index() < n;
        if let Some(pairs) = &self.traffic.pairs {
            if pairs.iter().any(|(s, d)| !in_range(s) || !in_range(d) || s == d) {
                return bad("traffic pairs must name two distinct existing nodes");
            }
        }
        if let Some(ids) = &self.attackers {
            if !ids.iter().all(in_range) {
                return bad("attacker ids must exist");
            }
            if let Some(pairs) = &self.traffic.pairs {
                if pairs.iter().any(|(s, d)| ids.contains(s) || ids.contains(d)) {
                    return Err(ConfigError::Unsatisfiable("flow endpoints must be honest".into()));
                }
            }
        }
        if self.attackers.is_none() {
            let reserved = match &self.traffic.pairs {
                Some(p) => p.iter().flat_map(|&(s, d)| [s, d]).collect::<std::collections::BTreeSet<_>>().len(),
                None if self.traffic.flows > 0 => 2,
                None => 0,
            };
            if self.attacker_count() + reserved > n {
                return Err(ConfigError::Unsatisfiable(format!(
                    "{} attackers leave too few honest flow endpoints among {n} nodes",
                    self.attacker_count()
                )));
            }
        }
        Ok(())
    }
}
