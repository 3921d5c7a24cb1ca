use grayguard_core::adversary::ControlReaction;
use grayguard_core::experiment::{run_scenario, run_scenario_with};
use grayguard_core::layouts::{single_grayhole, GRAYHOLE};
use grayguard_core::network::LogOptions;

fn with_reaction(reaction: ControlReaction) -> grayguard_core::config::ScenarioConfig {
    let mut cfg = single_grayhole();
    cfg.attacker.control_reaction = reaction;
    cfg
}

#[test]
fn silent_attacker_is_convicted() {
    let r = run_scenario(&single_grayhole()).unwrap();
    assert_eq!(r.convicted, vec![GRAYHOLE]);
    assert!(r.counters.sessions >= 1);
}

#[test]
fn wrong_digest_is_convicted_without_arbitration() {
    let r = run_scenario(&with_reaction(ControlReaction::WrongDigest)).unwrap();
    assert_eq!(r.convicted, vec![GRAYHOLE]);
    assert!(r.counters.convictions_direct >= 1);
    assert_eq!(r.counters.convictions_arbitrated, 0);
}

#[test]
fn suppressing_downstream_responses_is_caught() {
    let mut cfg = with_reaction(ControlReaction::SuppressDownstream);
    cfg.epoch_ms = 1_000_000;
    let r = run_scenario(&cfg).unwrap();
    assert_eq!(r.convicted, vec![GRAYHOLE], "{:?}", r.counters);
}

#[test]
fn forwarding_without_answering_is_caught() {
    let mut cfg = with_reaction(ControlReaction::ForwardNoResponse);
    cfg.epoch_ms = 1_000_000;
    let r = run_scenario(&cfg).unwrap();
    assert_eq!(r.convicted, vec![GRAYHOLE], "{:?}", r.counters);
}

#[test]
fn complying_attacker_is_never_convicted_by_the_challenge() {
    let mut cfg = with_reaction(ControlReaction::Comply);
    cfg.epoch_ms = 1_000_000;
    let out = run_scenario_with(&cfg, LogOptions { trace: false, logs: true }).unwrap();
    assert!(out.report.convicted.iter().all(|&n| n == GRAYHOLE), "{:?}", out.report.convicted);
    assert_eq!(out.report.fpr, 0.0);
}

#[test]
fn detection_log_rows_have_five_fields() {
    let out = run_scenario_with(&single_grayhole(), LogOptions { trace: false, logs: true }).unwrap();
    assert!(!out.logs.detections.is_empty());
    for row in &out.logs.detections {
        assert_eq!(row.split(',').count(), 5, "{row}");
    }
    for row in &out.logs.quarantine {
        assert_eq!(row.split(',').count(), 3, "{row}");
    }
}
