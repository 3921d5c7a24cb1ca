//! Static node placement, unit-disk neighborhoods and the ideal radio.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::kernel::{Kernel, Millis};
use crate::rng::{stream, Stream};
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Node positions inside a rectangular area, with neighbor lists precomputed
/// from a boundary-inclusive transmission radius.
#[derive(Debug, Clone, Serialize)]
pub struct Topology {
    positions: Vec<Position>,
    range: f64,
    area: (f64, f64),
    #[serde(skip)]
    adjacency: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Builds a topology from explicit coordinates. Node ids are the indices.
    pub fn from_positions(positions: Vec<Position>, range: f64, area: (f64, f64)) -> Self {
        let adjacency = (0..positions.len())
            .map(|i| {
                (0..positions.len())
                    .filter(|&j| j != i && positions[i].distance(&positions[j]) <= range)
                    .map(|j| NodeId(j as u32))
                    .collect()
            })
            .collect();
        Self {
            positions,
            range,
            area,
            adjacency,
        }
    }

    /// Places `n` nodes i.i.d. uniformly over `area` from the seed's placement stream.
    pub fn place_uniform(n: usize, area: (f64, f64), range: f64, seed: u64) -> Self {
        let mut rng = stream(seed, Stream::Placement);
        let positions = (0..n)
            .map(|_| Position {
                x: rng.gen_range(0.0..=area.0),
                y: rng.gen_range(0.0..=area.1),
            })
            .collect();
        Self::from_positions(positions, range, area)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn area(&self) -> (f64, f64) {
        self.area
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.positions.len() as u32).map(NodeId)
    }

    pub fn position(&self, x: NodeId) -> Result<Position, SimError> {
        self.positions
            .get(x.index())
            .copied()
            .ok_or(SimError::UnknownNode(x))
    }

    /// `{y != x : dist(x, y) <= range}`, sorted by id.
    pub fn neighbors(&self, x: NodeId) -> Result<&[NodeId], SimError> {
        self.adjacency
            .get(x.index())
            .map(Vec::as_slice)
            .ok_or(SimError::UnknownNode(x))
    }

    pub fn are_neighbors(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency
            .get(a.index())
            .is_some_and(|adj| adj.binary_search(&b).is_ok())
    }

    /// Every consecutive pair of `path` is a radio link.
    pub fn is_connected_path(&self, path: &[NodeId]) -> bool {
        path.windows(2).all(|w| self.are_neighbors(w[0], w[1]))
    }

    /// Hop distances from `origin` (breadth-first), `None` for unreachable nodes.
    pub fn hop_distances(&self, origin: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut frontier = std::collections::VecDeque::new();
        if origin.index() < self.len() {
            dist[origin.index()] = Some(0);
            frontier.push_back(origin);
        }
        while let Some(u) = frontier.pop_front() {
            let d = dist[u.index()].unwrap_or(0);
            for &v in &self.adjacency[u.index()] {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(d + 1);
                    frontier.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.hop_distances(NodeId(0)).iter().all(Option::is_some)
    }
}

/// Ideal broadcast MAC: a fixed per-hop delay and optional independent
/// per-delivery loss.
pub struct Radio {
    topology: Topology,
    per_hop_delay: Millis,
    loss_prob: f64,
    rng: ChaCha8Rng,
}

impl Radio {
    pub fn new(topology: Topology, per_hop_delay: Millis, loss_prob: f64, seed: u64) -> Self {
        Self {
            topology,
            per_hop_delay,
            loss_prob,
            rng: stream(seed, Stream::Radio),
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn per_hop_delay(&self) -> Millis {
        self.per_hop_delay
    }

    fn survives(&mut self) -> bool {
        self.loss_prob <= 0.0 || !self.rng.gen_bool(self.loss_prob.min(1.0))
    }

    /// Schedules one delivery per neighbor of `sender` at `now + per_hop_delay`,
    /// skipping lost links. Returns the neighbors actually reached.
    pub fn broadcast<P>(
        &mut self,
        kernel: &mut Kernel<P>,
        sender: NodeId,
        mut make: impl FnMut(NodeId) -> P,
    ) -> Vec<NodeId> {
        let neighbors = match self.topology.neighbors(sender) {
            Ok(ns) => ns.to_vec(),
            Err(_) => return Vec::new(),
        };
        let mut reached = Vec::with_capacity(neighbors.len());
        for to in neighbors {
            if self.survives() {
                kernel.schedule_in(self.per_hop_delay, to, make(to));
                reached.push(to);
            }
        }
        reached
    }

    /// Point-to-point transmission; fails when `to` is out of range or the
    /// frame is lost.
    pub fn unicast<P>(&mut self, kernel: &mut Kernel<P>, from: NodeId, to: NodeId, payload: P) -> bool {
        if !self.topology.are_neighbors(from, to) || !self.survives() {
            return false;
        }
        kernel.schedule_in(self.per_hop_delay, to, payload);
        true
    }
}
