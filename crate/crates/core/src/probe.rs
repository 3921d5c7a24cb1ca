//! Route testing with multi-block probe packets and the per-route blackhole
//! suspicion score.
//!
//! A route gets one initialization round plus [`UPDATE_ROUNDS`] update
//! rounds. The first round sets the score to 0 (complete acknowledgment) or
//! 100 (anything else); each update subtracts 50 on success, clamped at 0,
//! and adds 20 on failure.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::NodeId;

pub const INITIAL_CLEAN: u32 = 0;
pub const INITIAL_SUSPECT: u32 = 100;
pub const SUCCESS_DECREMENT: u32 = 50;
pub const FAILURE_INCREMENT: u32 = 20;
pub const INFECTED_THRESHOLD: u32 = 50;
pub const UPDATE_ROUNDS: u8 = 2;
pub const TOTAL_ROUNDS: u8 = 1 + UPDATE_ROUNDS;

pub type ProbeId = u64;

/// One block of a multi-block test packet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestBlock {
    pub probe_id: ProbeId,
    pub round: u8,
    pub block: u16,
    pub n_blocks: u16,
    pub route: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProbeAck {
    pub probe_id: ProbeId,
    pub round: u8,
    pub received_blocks: u16,
}

/// Outcome of a single probe round as judged by the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundResult {
    /// Acknowledgment arrived and reports every block.
    Complete,
    /// Acknowledgment arrived short.
    Short(u16),
    Missing,
}

impl RoundResult {
    pub fn judge(ack: Option<u16>, n_blocks: u16) -> Self {
        match ack {
            Some(n) if n >= n_blocks => RoundResult::Complete,
            Some(n) => RoundResult::Short(n),
            None => RoundResult::Missing,
        }
    }

    pub fn ok(self) -> bool {
        self == RoundResult::Complete
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pending,
    Valid,
    Infected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RouteScore {
    pub route_id: ProbeId,
    p_bh: u32,
    rounds: Vec<RoundResult>,
    verdict: Verdict,
}

impl RouteScore {
    /// Score after the initialization round.
    pub fn initialize(route_id: ProbeId, first: RoundResult) -> Self {
        let p_bh = if first.ok() { INITIAL_CLEAN } else { INITIAL_SUSPECT };
        Self {
            route_id,
            p_bh,
            rounds: vec![first],
            verdict: Verdict::Pending,
        }
    }

    /// Builds a completed score directly; useful for replaying logged values.
    pub fn completed(route_id: ProbeId, p_bh: u32, rounds: Vec<RoundResult>) -> Self {
        let mut s = Self { route_id, p_bh, rounds, verdict: Verdict::Pending };
        if s.rounds_done() >= TOTAL_ROUNDS {
            s.verdict = classify_route(&s).unwrap_or(Verdict::Pending);
        }
        s
    }

    pub fn p_bh(&self) -> u32 {
        self.p_bh
    }

    pub fn rounds_done(&self) -> u8 {
        self.rounds.len() as u8
    }

    pub fn rounds(&self) -> &[RoundResult] {
        &self.rounds
    }

    pub fn failures(&self) -> usize {
        self.rounds.iter().filter(|r| !r.ok()).count()
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn update(&mut self, result: RoundResult) -> Result<(), SimError> {
        if self.rounds_done() >= TOTAL_ROUNDS {
            return Err(SimError::ScoreComplete(self.rounds_done()));
        }
        self.p_bh = if result.ok() {
            self.p_bh.saturating_sub(SUCCESS_DECREMENT)
        } else {
            self.p_bh + FAILURE_INCREMENT
        };
        self.rounds.push(result);
        if self.rounds_done() == TOTAL_ROUNDS {
            self.verdict = classify_route(self)?;
        }
        Ok(())
    }
}

pub fn initialize_pbh(route_id: ProbeId, first: RoundResult) -> RouteScore {
    RouteScore::initialize(route_id, first)
}

pub fn update_pbh(mut score: RouteScore, result: RoundResult) -> Result<RouteScore, SimError> {
    score.update(result)?;
    Ok(score)
}

/// Final verdict once all rounds are in.
///
/// Infected when the score reaches the threshold, or when most rounds
/// failed (a clean first round followed by two failures scores only 40).
pub fn classify_route(score: &RouteScore) -> Result<Verdict, SimError> {
    if score.rounds_done() < TOTAL_ROUNDS {
        return Err(SimError::ScoreIncomplete(score.rounds_done()));
    }
    let majority_failed = score.failures() * 2 > score.rounds.len();
    Ok(if score.p_bh >= INFECTED_THRESHOLD || majority_failed {
        Verdict::Infected
    } else {
        Verdict::Valid
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use RoundResult::{Complete, Missing, Short};

    fn run(seq: &[RoundResult]) -> RouteScore {
        let mut s = initialize_pbh(0, seq[0]);
        for r in &seq[1..] {
            s = update_pbh(s, *r).unwrap();
        }
        s
    }

    #[test]
    fn initialization_rule() {
        assert_eq!(initialize_pbh(1, Complete).p_bh(), 0);
        assert_eq!(initialize_pbh(1, Missing).p_bh(), 100);
        assert_eq!(initialize_pbh(1, RoundResult::judge(Some(9), 10)).p_bh(), 100);
        assert_eq!(initialize_pbh(1, Complete).rounds_done(), 1);
    }

    #[test]
    fn judge_ack_counts() {
        assert_eq!(RoundResult::judge(Some(10), 10), Complete);
        assert_eq!(RoundResult::judge(Some(3), 10), Short(3));
        assert_eq!(RoundResult::judge(None, 10), Missing);
    }

    #[test]
    fn sequential_updates() {
        let s = run(&[Missing, Complete, Missing]);
        assert_eq!(s.p_bh(), 70);
        assert_eq!(s.verdict(), Verdict::Infected);
        let s = run(&[Complete, Complete, Complete]);
        assert_eq!(s.p_bh(), 0);
        assert_eq!(s.verdict(), Verdict::Valid);
        let s = run(&[Missing, Missing, Missing]);
        assert_eq!(s.p_bh(), 140);
        assert_eq!(s.verdict(), Verdict::Infected);
    }

    #[test]
    fn update_after_verdict_is_rejected() {
        let s = run(&[Complete, Complete, Complete]);
        assert_eq!(update_pbh(s, Complete), Err(SimError::ScoreComplete(3)));
    }

    #[test]
    fn classify_thresholds() {
        let seq = vec![Missing, Complete, Missing];
        assert_eq!(classify_route(&RouteScore::completed(0, 70, seq.clone())), Ok(Verdict::Infected));
        let clean = vec![Complete; 3];
        assert_eq!(classify_route(&RouteScore::completed(0, 0, clean.clone())), Ok(Verdict::Valid));
        assert_eq!(classify_route(&RouteScore::completed(0, 50, clean)), Ok(Verdict::Infected));
        assert_eq!(
            classify_route(&initialize_pbh(0, Complete)),
            Err(SimError::ScoreIncomplete(1))
        );
    }

    #[test]
    fn classify_is_monotone_in_score() {
        let rounds = vec![Complete, Complete, Missing];
        let mut last = Verdict::Valid;
        for p in 0..200 {
            let v = classify_route(&RouteScore::completed(0, p, rounds.clone())).unwrap();
            if last == Verdict::Infected {
                assert_eq!(v, Verdict::Infected);
            }
            last = v;
        }
    }
}
