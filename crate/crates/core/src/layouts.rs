//! Small scripted layouts with hand-placed nodes.
//!
//! `single_grayhole`: nine nodes, source 0, destination 5, and node 3 as
//! the lone gray hole sitting between the two branches:
//!
//! ```text
//! 0 - 1 - 8 - 4 - 5
//!  \          |  /
//!   6 - 7 --- 3
//!        \   /
//!          2
//! ```
//!
//! `colluding_pair`: six nodes, source 0, destination 5, colluders 1 and 2
//! on the upper branch and honest 3, 4 on the lower one:
//!
//! ```text
//! 0 - 1 - 2 - 5
//!  \     |   /
//!   3 - 4 ---
//! ```

use crate::adversary::{AttackerParams, ControlReaction};
use crate::config::{ScenarioConfig, TrafficConfig};
use crate::topology::Position;
use crate::NodeId;

pub const SOURCE: NodeId = NodeId(0);
pub const DESTINATION: NodeId = NodeId(5);
pub const GRAYHOLE: NodeId = NodeId(3);
pub const COLLUDER_FRONT: NodeId = NodeId(1);
pub const COLLUDER_BACK: NodeId = NodeId(2);

fn at(points: &[(f64, f64)]) -> Vec<Position> {
    points.iter().map(|&(x, y)| Position { x, y }).collect()
}

fn scripted(positions: Vec<Position>, area: (f64, f64), attackers: Vec<NodeId>) -> ScenarioConfig {
    ScenarioConfig {
        node_count: positions.len(),
        area,
        range: 50.0,
        malicious_ratio: 0.0,
        sim_time_s: 5.0,
        traffic: TrafficConfig {
            flows: 1,
            pairs: Some(vec![(SOURCE, DESTINATION)]),
            start_jitter_ms: 0,
            ..TrafficConfig::default()
        },
        positions: Some(positions),
        attackers: Some(attackers),
        ..ScenarioConfig::default()
    }
}

pub fn single_grayhole() -> ScenarioConfig {
    let positions = at(&[
        (28.0, 101.0),
        (56.0, 132.0),
        (126.0, 41.0),
        (126.0, 82.0),
        (122.0, 119.0),
        (154.0, 98.0),
        (55.0, 69.0),
        (95.0, 62.0),
        (92.0, 147.0),
    ]);
    let mut cfg = scripted(positions, (160.0, 160.0), vec![GRAYHOLE]);
    cfg.attacker = AttackerParams {
        data_drop_prob: 1.0,
        rreq_drop_prob: 1.0,
        control_reaction: ControlReaction::SilentDrop,
        fast_reply: true,
        ..AttackerParams::default()
    };
    cfg
}

pub fn colluding_pair() -> ScenarioConfig {
    let positions = at(&[(23.0, 55.0), (50.0, 84.0), (85.0, 73.0), (49.0, 23.0), (89.0, 32.0), (118.0, 50.0)]);
    let mut cfg = scripted(positions, (130.0, 100.0), vec![COLLUDER_FRONT, COLLUDER_BACK]);
    cfg.cooperative_pairs = 1;
    cfg
}
