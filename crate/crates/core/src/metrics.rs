//! Node-level confusion matrix and traffic statistics.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::adversary::GroundTruth;
use crate::NodeId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub tp: u32,
    pub fp: u32,
    pub tn: u32,
    pub fn_: u32,
}

/// Scores the convicted set against ground truth over `scored` nodes.
pub fn score_run(
    convicted: &BTreeSet<NodeId>,
    truth: &GroundTruth,
    scored: impl IntoIterator<Item = NodeId>,
) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for n in scored {
        match (truth.is_malicious(n), convicted.contains(&n)) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    cm
}

impl ConfusionMatrix {
    pub fn total(&self) -> u32 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Percent of honest nodes convicted; 0 when there are none.
    pub fn fpr(&self) -> f64 {
        percent(self.fp, self.fp + self.tn, 0.0)
    }

    /// Percent of attackers missed. Computed as the complement of [`Self::dr`]
    /// so the two always sum to exactly 100.
    pub fn fnr(&self) -> f64 {
        100.0 - self.dr()
    }

    /// Percent of attackers convicted; 100 when there are none.
    pub fn dr(&self) -> f64 {
        percent(self.tp, self.tp + self.fn_, 100.0)
    }
}

fn percent(num: u32, den: u32, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        100.0 * f64::from(num) / f64::from(den)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrafficStats {
    pub data_sent: u64,
    pub data_delivered: u64,
    pub delays_ms: Vec<u64>,
}

impl TrafficStats {
    pub fn record_sent(&mut self) {
        self.data_sent += 1;
    }

    pub fn record_delivery(&mut self, delay_ms: u64) {
        self.data_delivered += 1;
        self.delays_ms.push(delay_ms);
    }

    pub fn merge(&mut self, other: &TrafficStats) {
        self.data_sent += other.data_sent;
        self.data_delivered += other.data_delivered;
        self.delays_ms.extend_from_slice(&other.delays_ms);
    }

    pub fn pdr(&self) -> Option<f64> {
        (self.data_sent > 0).then(|| 100.0 * self.data_delivered as f64 / self.data_sent as f64)
    }

    pub fn avg_delay(&self) -> Option<f64> {
        if self.delays_ms.is_empty() {
            return None;
        }
        let sum: u64 = self.delays_ms.iter().sum();
        Some(sum as f64 / self.delays_ms.len() as f64)
    }
}
