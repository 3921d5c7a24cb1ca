//! Neighbor monitoring tables and the RREQ-based trust classification.
//!
//! Every node keeps, per neighbor, how many route requests it handed to that
//! neighbor (`rreq_t`) and how many forwards by that neighbor it overheard
//! (`rreq_c`). A neighbor whose transfer count exceeds its forward count by
//! more than the threshold is swallowing requests and is classified `Low`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::NodeId;

/// Trust threshold: an honest neighbor forwards every unique request it gets.
pub const TRUST_THRESHOLD: i64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MonitorEntry {
    pub neighbor: NodeId,
    pub rreq_t: u32,
    pub rreq_c: u32,
}

impl MonitorEntry {
    fn new(neighbor: NodeId) -> Self {
        Self {
            neighbor,
            rreq_t: 0,
            rreq_c: 0,
        }
    }

    pub fn score(&self) -> i64 {
        i64::from(self.rreq_t) - i64::from(self.rreq_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrustLevel {
    High,
    Low,
}

impl fmt::Display for TrustLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrustLevel::High => "High",
            TrustLevel::Low => "Low",
        })
    }
}

/// `High` iff `score <= TRUST_THRESHOLD`. Pure in the counters.
pub fn classify_score(score: i64) -> TrustLevel {
    if score > TRUST_THRESHOLD {
        TrustLevel::Low
    } else {
        TrustLevel::High
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitoringTable {
    owner: NodeId,
    entries: BTreeMap<NodeId, MonitorEntry>,
    epoch: u64,
    /// Low verdicts observed per neighbor across all epochs.
    low_history: BTreeMap<NodeId, u32>,
}

impl MonitoringTable {
    pub fn new(owner: NodeId) -> Self {
        Self {
            owner,
            entries: BTreeMap::new(),
            epoch: 0,
            low_history: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn entries(&self) -> impl Iterator<Item = &MonitorEntry> {
        self.entries.values()
    }

    /// Missing entries read as zeros.
    pub fn entry(&self, neighbor: NodeId) -> MonitorEntry {
        self.entries
            .get(&neighbor)
            .copied()
            .unwrap_or_else(|| MonitorEntry::new(neighbor))
    }

    pub fn contains(&self, neighbor: NodeId) -> bool {
        self.entries.contains_key(&neighbor)
    }

    fn slot(&mut self, neighbor: NodeId) -> &mut MonitorEntry {
        self.entries
            .entry(neighbor)
            .or_insert_with(|| MonitorEntry::new(neighbor))
    }

    /// Makes sure a row exists without touching its counters.
    pub fn touch(&mut self, neighbor: NodeId) {
        self.slot(neighbor);
    }

    pub fn record_delivery(&mut self, neighbor: NodeId) {
        self.slot(neighbor).rreq_t += 1;
    }

    pub fn record_overheard_forward(&mut self, neighbor: NodeId) {
        self.slot(neighbor).rreq_c += 1;
    }

    pub fn trust_score(&self, neighbor: NodeId) -> i64 {
        self.entry(neighbor).score()
    }

    pub fn classify(&self, neighbor: NodeId) -> TrustLevel {
        classify_score(self.trust_score(neighbor))
    }

    /// Classification that is also remembered for reporting.
    pub fn observe(&mut self, neighbor: NodeId) -> TrustLevel {
        let level = self.classify(neighbor);
        if level == TrustLevel::Low {
            *self.low_history.entry(neighbor).or_default() += 1;
        }
        level
    }

    pub fn low_history(&self) -> &BTreeMap<NodeId, u32> {
        &self.low_history
    }

    /// Starts a new observation epoch with all counters at zero.
    pub fn periodic_refresh(&mut self) {
        self.epoch += 1;
        for entry in self.entries.values_mut() {
            entry.rreq_t = 0;
            entry.rreq_c = 0;
        }
    }

    /// Applies however many refreshes a fixed timer of period `epoch_len`
    /// would have fired by time `now`.
    pub fn sync_epoch(&mut self, now: u64, epoch_len: u64) {
        if epoch_len == 0 {
            return;
        }
        let target = now / epoch_len;
        if target > self.epoch {
            self.periodic_refresh();
            self.epoch = target;
        }
    }

    /// CSV rows `owner,neighbor,rreq_t,rreq_c,epoch`, without header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for e in self.entries.values() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.owner, e.neighbor, e.rreq_t, e.rreq_c, self.epoch
            ));
        }
        out
    }
}

pub const TABLE_CSV_HEADER: &str = "owner,neighbor,rreq_t,rreq_c,epoch";

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DO: NodeId = NodeId(3);

    #[test]
    fn delivery_creates_and_counts() {
        let mut t = MonitoringTable::new(NodeId(0));
        t.record_delivery(NodeId(5));
        assert_eq!(
            t.entry(NodeId(5)),
            MonitorEntry { neighbor: NodeId(5), rreq_t: 1, rreq_c: 0 }
        );
        t.record_delivery(NodeId(5));
        t.record_delivery(NodeId(5));
        assert_eq!(t.entry(NodeId(5)).rreq_t, 3);
    }

    #[test]
    fn thing_do_delivers_once_to_five() {
        let mut t = MonitoringTable::new(DO);
        t.record_delivery(NodeId(5));
        assert_eq!((t.entry(NodeId(5)).rreq_t, t.entry(NodeId(5)).rreq_c), (1, 0));
    }

    #[test]
    fn overheard_forwards_credit_sender() {
        let mut four = MonitoringTable::new(NodeId(4));
        four.record_overheard_forward(NodeId(8));
        assert_eq!((four.entry(NodeId(8)).rreq_t, four.entry(NodeId(8)).rreq_c), (0, 1));
        let mut seven = MonitoringTable::new(NodeId(7));
        seven.record_overheard_forward(NodeId(6));
        assert_eq!(seven.entry(NodeId(6)).rreq_c, 1);
        assert_eq!(seven.entry(NodeId(2)).rreq_c, 0);
    }

    #[test]
    fn scores_match_thing_four_table() {
        let mut four = MonitoringTable::new(NodeId(4));
        four.touch(NodeId(5));
        four.record_overheard_forward(NodeId(8));
        four.record_delivery(DO);
        assert_eq!(four.trust_score(DO), 1);
        assert_eq!(four.trust_score(NodeId(8)), -1);
        assert_eq!(four.trust_score(NodeId(42)), 0);
        assert_eq!(four.classify(DO), TrustLevel::Low);
        for n in [1, 2, 4, 5, 8] {
            assert_eq!(four.classify(NodeId(n)), TrustLevel::High);
        }
    }

    #[test]
    fn partial_forwarder_is_low() {
        let mut t = MonitoringTable::new(NodeId(0));
        t.record_delivery(NodeId(1));
        t.record_delivery(NodeId(1));
        t.record_overheard_forward(NodeId(1));
        assert_eq!(t.classify(NodeId(1)), TrustLevel::Low);
    }

    #[test]
    fn refresh_resets_counters() {
        let mut t = MonitoringTable::new(NodeId(0));
        t.record_delivery(NodeId(1));
        t.record_overheard_forward(NodeId(2));
        t.periodic_refresh();
        assert_eq!(t.epoch(), 1);
        assert!(t.entries().all(|e| e.rreq_t == 0 && e.rreq_c == 0));
        assert!(t.contains(NodeId(1)));

        let mut empty = MonitoringTable::new(NodeId(9));
        empty.periodic_refresh();
        assert_eq!(empty.epoch(), 1);
        assert_eq!(empty.entries().count(), 0);
    }

    #[test]
    fn drop_in_first_epoch_only() {
        // Epoch 0: neighbor 1 swallows one request. Epoch 1: it forwards.
        let mut t = MonitoringTable::new(NodeId(0));
        t.record_delivery(NodeId(1));
        assert_eq!(t.observe(NodeId(1)), TrustLevel::Low);
        t.sync_epoch(150, 100);
        t.record_delivery(NodeId(1));
        t.record_overheard_forward(NodeId(1));
        assert_eq!(t.observe(NodeId(1)), TrustLevel::High);
        assert_eq!(t.low_history().get(&NodeId(1)), Some(&1));
    }

    #[test]
    fn csv_dump_lists_rows() {
        let mut t = MonitoringTable::new(NodeId(4));
        t.record_overheard_forward(NodeId(8));
        assert_eq!(t.csv_rows(), "4,8,0,1,0\n");
    }

    proptest! {
        #[test]
        fn classify_depends_only_on_counters(t in 0u32..50, c in 0u32..50, owner in 0u32..10) {
            let mut a = MonitoringTable::new(NodeId(owner));
            let mut b = MonitoringTable::new(NodeId(owner + 1));
            for _ in 0..t { a.record_delivery(NodeId(99)); }
            for _ in 0..c { a.record_overheard_forward(NodeId(99)); }
            for _ in 0..c { b.record_overheard_forward(NodeId(99)); }
            for _ in 0..t { b.record_delivery(NodeId(99)); }
            prop_assert_eq!(a.classify(NodeId(99)), b.classify(NodeId(99)));
            prop_assert_eq!(a.classify(NodeId(99)) == TrustLevel::Low, t > c);
        }

        #[test]
        fn counters_never_decrease_within_epoch(ops in proptest::collection::vec(any::<bool>(), 0..60)) {
            let mut t = MonitoringTable::new(NodeId(0));
            let mut prev = t.entry(NodeId(1));
            for deliver in ops {
                if deliver { t.record_delivery(NodeId(1)) } else { t.record_overheard_forward(NodeId(1)) }
                let cur = t.entry(NodeId(1));
                prop_assert!(cur.rreq_t >= prev.rreq_t && cur.rreq_c >= prev.rreq_c);
                prev = cur;
            }
        }
    }
}
