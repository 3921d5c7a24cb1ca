//! Micro-scale scenarios with a unique source-destination path, and a
//! trace-replay oracle that finds where traffic died.

use std::collections::{BTreeMap, BTreeSet};

use grayguard_core::config::{ScenarioConfig, TrafficConfig};
use grayguard_core::network::TraceRecord;
use grayguard_core::topology::{Position, Topology};
use grayguard_core::NodeId;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Micro {
    pub config: ScenarioConfig,
    pub path: Vec<NodeId>,
    pub attacker: NodeId,
}

fn simple_paths(t: &Topology, s: NodeId, d: NodeId) -> Vec<Vec<NodeId>> {
    fn walk(t: &Topology, at: NodeId, d: NodeId, stack: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        if at == d {
            out.push(stack.clone());
            return;
        }
        for &n in t.neighbors(at).unwrap() {
            if !stack.contains(&n) {
                stack.push(n);
                walk(t, n, d, stack, out);
                stack.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(t, s, d, &mut vec![s], &mut out);
    out
}

/// A connected `n`-node layout with some endpoint pair joined by exactly one
/// simple path of at least three nodes, and an always-drop attacker inside it.
pub fn generate(n: usize, seed: u64) -> Micro {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = (40.0 * n as f64, 40.0 * n as f64);
    loop {
        let positions: Vec<Position> = (0..n)
            .map(|_| Position { x: rng.gen_range(0.0..area.0), y: rng.gen_range(0.0..area.1) })
            .collect();
        let t = Topology::from_positions(positions.clone(), 50.0, area);
        if !t.is_connected() {
            continue;
        }
        let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
        for a in t.nodes() {
            for b in t.nodes() {
                if a != b {
                    pairs.push((a, b));
                }
            }
        }
        pairs.shuffle(&mut rng);
        for (s, d) in pairs {
            let paths = simple_paths(&t, s, d);
            if paths.len() == 1 && paths[0].len() >= 3 {
                let path = paths[0].clone();
                let attacker = path[rng.gen_range(1..path.len() - 1)];
                let mut config = ScenarioConfig {
                    node_count: n,
                    area,
                    range: 50.0,
                    sim_time_s: 3.0,
                    seed,
                    traffic: TrafficConfig { flows: 1, pairs: Some(vec![(s, d)]), start_jitter_ms: 0, ..TrafficConfig::default() },
                    positions: Some(positions),
                    attackers: Some(vec![attacker]),
                    ..ScenarioConfig::default()
                };
                config.attacker.data_drop_prob = 1.0;
                return Micro { config, path, attacker };
            }
        }
    }
}

/// Every node that took delivery of a data packet or test block bound
/// elsewhere and never passed that same packet on.
pub fn drop_loci(trace: &[TraceRecord], destination: NodeId) -> BTreeSet<NodeId> {
    let mut received: BTreeMap<(&str, &str), BTreeSet<NodeId>> = BTreeMap::new();
    let mut passed: BTreeMap<(&str, &str), BTreeSet<NodeId>> = BTreeMap::new();
    for r in trace.iter().filter(|r| r.kind == "data" || r.kind == "block") {
        received.entry((r.kind, &r.detail)).or_default().insert(r.to);
        passed.entry((r.kind, &r.detail)).or_default().insert(r.from);
    }
    let mut loci = BTreeSet::new();
    for (key, nodes) in &received {
        let out = passed.get(key).cloned().unwrap_or_default();
        loci.extend(nodes.iter().filter(|n| **n != destination && !out.contains(n)));
    }
    loci
}
