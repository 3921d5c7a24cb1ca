//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//!
//! Budgets and tolerances are pinned below. Heavy criteria use shortened
//! simulated time so the whole target finishes in a few minutes on one core.

mod support;

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use grayguard_core::config::ScenarioConfig;
use grayguard_core::detect::sha256;
use grayguard_core::experiment::{build_setup, run_scenario, run_scenario_with, run_sweep, RunReport};
use grayguard_core::layouts::{colluding_pair, single_grayhole, COLLUDER_BACK, COLLUDER_FRONT, GRAYHOLE};
use grayguard_core::network::{LogOptions, Simulation};
use grayguard_core::probe::{RoundResult, RouteScore, Verdict};
use grayguard_core::trust::TrustLevel;
use grayguard_core::NodeId;

use support::{micro, sha256_ref};

const FAST_BUDGET: Duration = Duration::from_secs(1);
const COOP_BUDGET: Duration = Duration::from_secs(10);
const MICRO_BUDGET: Duration = Duration::from_secs(60);
const SWEEP_BUDGET: Duration = Duration::from_secs(600);

const SOUNDNESS_RATIOS: [f64; 3] = [0.08, 0.16, 0.24];
const SOUNDNESS_SEEDS: u64 = 34;
const LOSSY_SEEDS: u64 = 10;
const LOSS_PROB: f64 = 0.01;
const LOSSY_FPR_MAX: f64 = 15.0;
const HEAVY_SIM_S: f64 = 200.0;

const TREND_SEEDS: u64 = 10;
const TREND_LOW_RATIO_DR_MIN: f64 = 85.0;
const TREND_NOISE: f64 = 3.0;

const PDR_RATIO: f64 = 0.24;
const PDR_SEEDS: u64 = 10;
const PDR_GAIN_MIN: f64 = 15.0;

const COOP_SEEDS: u64 = 100;
const MICRO_SEEDS: u64 = 100;
const MICRO_SIZES: std::ops::RangeInclusive<usize> = 3..=8;

type Outcome = Result<String, String>;

struct Report {
    failures: usize,
}

impl Report {
    fn record(&mut self, id: &str, name: &str, started: Instant, budget: Duration, outcome: Outcome) {
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > budget => Err(format!("took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {id} {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL {id} {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sha256_conformance() -> Outcome {
    let million = vec![b'a'; 1_000_000];
    let vectors: [(&str, &[u8], &str); 3] = [
        ("empty", b"", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
        ("abc", b"abc", "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
        ("million-a", &million, "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0"),
    ];
    for (name, msg, hex) in vectors {
        let got = sha256(msg);
        let want = sha256_ref::digest(msg);
        check(got == want, || format!("{name}: differs from reference"))?;
        check(hex_of(&want) == hex, || format!("{name}: reference disagrees with published vector"))?;
    }
    Ok("3 vectors bit-exact".into())
}

fn hex_of(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn golden_grayhole() -> Outcome {
    let cfg = single_grayhole();
    let mut sim = Simulation::new(&cfg, build_setup(&cfg).map_err(|e| e.to_string())?, LogOptions::default());
    sim.run_until(15);

    let table = sim.table(NodeId(4));
    let mut rows: Vec<(u32, u32, u32)> = table.entries().map(|e| (e.neighbor.0, e.rreq_t, e.rreq_c)).collect();
    rows.sort();
    let want = vec![(GRAYHOLE.0, 1, 0), (5, 0, 0), (8, 0, 1)];
    check(rows == want, || format!("node 4 table {rows:?}, want {want:?}"))?;

    let nodes = [NodeId(1), NodeId(2), GRAYHOLE, NodeId(4), NodeId(5)];
    for n in nodes {
        let low = sim
            .topology()
            .neighbors(n)
            .unwrap()
            .iter()
            .any(|&obs| sim.table(obs).contains(n) && sim.table(obs).classify(n) == TrustLevel::Low);
        let want = if n == GRAYHOLE { TrustLevel::Low } else { TrustLevel::High };
        let got = if low { TrustLevel::Low } else { TrustLevel::High };
        check(got == want, || format!("trust of {n} is {got}, want {want}"))?;
    }

    let first = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let second = run_scenario(&cfg).map_err(|e| e.to_string())?;
    check(first.convicted == vec![GRAYHOLE], || format!("convicted {:?}", first.convicted))?;
    check(first.fpr == 0.0, || format!("fpr {}", first.fpr))?;
    check(first == second, || "two runs differ".into())?;
    Ok(format!("table rows {rows:?}, convicted {:?}", first.convicted))
}

/// Score arithmetic written out independently of the engine.
fn oracle_score(rounds: &[bool]) -> (u32, Verdict) {
    let mut score: i64 = if rounds[0] { 0 } else { 100 };
    for &ok in &rounds[1..] {
        score = if ok { (score - 50).max(0) } else { score + 20 };
    }
    let failures = rounds.iter().filter(|ok| !**ok).count();
    let verdict = if failures >= 2 || score >= 50 { Verdict::Infected } else { Verdict::Valid };
    (score as u32, verdict)
}

fn pbh_state_machine() -> Outcome {
    let mut seen = Vec::new();
    for mask in 0u8..8 {
        let rounds: Vec<bool> = (0..3).map(|i| mask & (1 << i) == 0).collect();
        let as_result = |ok: bool| if ok { RoundResult::Complete } else { RoundResult::Missing };
        let mut score = RouteScore::initialize(u64::from(mask), as_result(rounds[0]));
        for &ok in &rounds[1..] {
            score.update(as_result(ok)).map_err(|e| e.to_string())?;
        }
        let (want_score, want_verdict) = oracle_score(&rounds);
        check(score.p_bh() == want_score && score.verdict() == want_verdict, || {
            format!("{rounds:?}: got ({}, {:?}), want ({want_score}, {want_verdict:?})", score.p_bh(), score.verdict())
        })?;
        let failures = rounds.iter().filter(|ok| !**ok).count();
        if failures >= 2 {
            check(want_verdict == Verdict::Infected, || format!("{rounds:?} not infected"))?;
        }
        if failures == 0 {
            check(want_verdict == Verdict::Valid, || format!("{rounds:?} not valid"))?;
        }
        seen.push(score.p_bh());
    }
    Ok(format!("8 sequences, scores {seen:?}"))
}

fn heavy_base() -> ScenarioConfig {
    ScenarioConfig { sim_time_s: HEAVY_SIM_S, ..ScenarioConfig::default() }
}

fn soundness(collected: &mut Vec<RunReport>) -> Outcome {
    let clean = run_sweep(&heavy_base(), &SOUNDNESS_RATIOS, SOUNDNESS_SEEDS).map_err(|e| e.to_string())?;
    for r in &clean.runs {
        let malicious: BTreeSet<NodeId> = r.malicious.iter().copied().collect();
        let honest: Vec<NodeId> = r.convicted.iter().copied().filter(|n| !malicious.contains(n)).collect();
        check(honest.is_empty(), || format!("ratio {} seed {} convicted honest {honest:?}", r.malicious_ratio, r.seed))?;
        check(r.fpr == 0.0, || format!("ratio {} seed {} fpr {}", r.malicious_ratio, r.seed, r.fpr))?;
    }
    let lossy_base = ScenarioConfig { loss_prob: LOSS_PROB, ..heavy_base() };
    let lossy = run_sweep(&lossy_base, &SOUNDNESS_RATIOS, LOSSY_SEEDS).map_err(|e| e.to_string())?;
    let mean_fpr = lossy.runs.iter().map(|r| r.fpr).sum::<f64>() / lossy.runs.len() as f64;
    check(mean_fpr <= LOSSY_FPR_MAX, || format!("lossy mean fpr {mean_fpr:.3} > {LOSSY_FPR_MAX}"))?;
    let detail = format!("{} loss-free runs fpr 0, {} lossy runs mean fpr {mean_fpr:.3}", clean.runs.len(), lossy.runs.len());
    collected.extend(clean.runs);
    collected.extend(lossy.runs);
    Ok(detail)
}

fn dr_trend(collected: &mut Vec<RunReport>) -> Outcome {
    let mut base = ScenarioConfig::preset(4).ok_or("missing preset 4")?;
    base.node_count = 100;
    base.sim_time_s = HEAVY_SIM_S;
    base.attacker.data_drop_prob = 1.0;
    let ratios: Vec<f64> = (0..=6).map(|i| f64::from(i) * 0.05).collect();
    let sweep = run_sweep(&base, &ratios, TREND_SEEDS).map_err(|e| e.to_string())?;
    let drs: Vec<(f64, f64)> = sweep.means.iter().map(|m| (m.ratio, m.dr)).collect();
    for &(ratio, dr) in drs.iter().filter(|(r, _)| *r > 0.0 && *r <= 0.08) {
        check(dr >= TREND_LOW_RATIO_DR_MIN, || format!("mean dr {dr:.3} at ratio {ratio}"))?;
    }
    let attacked: Vec<&(f64, f64)> = drs.iter().filter(|(r, _)| *r > 0.0).collect();
    for pair in attacked.windows(2) {
        let ((r0, d0), (r1, d1)) = (pair[0], pair[1]);
        check(*d1 <= d0 + TREND_NOISE, || format!("dr rose from {d0:.3} at {r0} to {d1:.3} at {r1}"))?;
    }
    collected.extend(sweep.runs);
    let shown: Vec<String> = attacked.iter().map(|(r, d)| format!("{r:.2}:{d:.1}")).collect();
    Ok(format!("mean dr {}", shown.join(" ")))
}

fn pdr_benefit(collected: &mut Vec<RunReport>) -> Outcome {
    let on = ScenarioConfig { defense: true, ..heavy_base() };
    let off = ScenarioConfig { defense: false, ..heavy_base() };
    let with = run_sweep(&on, &[PDR_RATIO], PDR_SEEDS).map_err(|e| e.to_string())?;
    let without = run_sweep(&off, &[PDR_RATIO], PDR_SEEDS).map_err(|e| e.to_string())?;
    let mut gains = Vec::new();
    for (a, b) in with.runs.iter().zip(&without.runs) {
        check(a.seed == b.seed, || "unpaired seeds".into())?;
        gains.push(a.pdr.unwrap_or(0.0) - b.pdr.unwrap_or(0.0));
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    check(mean >= PDR_GAIN_MIN, || format!("mean pdr gain {mean:.3} pp"))?;
    collected.extend(with.runs);
    collected.extend(without.runs);
    Ok(format!("mean pdr gain {mean:.3} pp over {} seed pairs", gains.len()))
}

fn complement_identity(runs: &[RunReport]) -> Outcome {
    check(!runs.is_empty(), || "no runs collected".into())?;
    for r in runs {
        check(r.dr + r.fnr == 100.0, || format!("ratio {} seed {}: dr {} + fnr {}", r.malicious_ratio, r.seed, r.dr, r.fnr))?;
    }
    Ok(format!("{} runs", runs.len()))
}

fn cooperative_coverage() -> Outcome {
    let pair = [COLLUDER_FRONT, COLLUDER_BACK];
    for seed in 1..=COOP_SEEDS {
        let cfg = ScenarioConfig { seed, ..colluding_pair() };
        let r = run_scenario(&cfg).map_err(|e| e.to_string())?;
        check(r.convicted.iter().any(|n| pair.contains(n)), || format!("seed {seed}: no colluder convicted"))?;
        check(r.convicted.iter().all(|n| pair.contains(n)), || format!("seed {seed}: convicted {:?}", r.convicted))?;
    }
    Ok(format!("{COOP_SEEDS}/{COOP_SEEDS} seeds"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("scenario.json");
    std::fs::write(&config, r#"{"node_count": 40, "area": [60, 60], "malicious_ratio": 0.16, "sim_time_s": 30, "seed": 11}"#)
        .map_err(|e| e.to_string())?;
    let run = |tag: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let csv = dir.path().join(format!("{tag}.csv"));
        let trace = dir.path().join(format!("{tag}.trace"));
        let status = Command::new(env!("CARGO_BIN_EXE_grayguard"))
            .arg("simulate")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&csv)
            .arg("--trace")
            .arg(&trace)
            .status()
            .map_err(|e| e.to_string())?;
        check(status.success(), || format!("simulate exited {status}"))?;
        Ok((std::fs::read(&csv).map_err(|e| e.to_string())?, std::fs::read(&trace).map_err(|e| e.to_string())?))
    };
    let (csv_a, trace_a) = run("a")?;
    let (csv_b, trace_b) = run("b")?;
    check(csv_a == csv_b, || "csv differs".into())?;
    check(trace_a == trace_b, || "trace differs".into())?;
    check(trace_a.len() > 1000, || "trace suspiciously short".into())?;
    Ok(format!("csv {} bytes, trace {} bytes identical", csv_a.len(), trace_a.len()))
}

fn micro_oracle() -> Outcome {
    let mut cases = 0;
    let mut with_drops = 0;
    for n in MICRO_SIZES {
        for seed in 0..MICRO_SEEDS {
            let m = micro::generate(n, seed);
            let opts = LogOptions { trace: true, logs: false };
            let out = run_scenario_with(&m.config, opts).map_err(|e| e.to_string())?;
            let destination = *m.path.last().unwrap();
            let oracle = micro::drop_loci(&out.logs.trace, destination);
            let convicted: BTreeSet<NodeId> = out.report.convicted.iter().copied().collect();
            check(convicted == oracle, || {
                format!("n {n} seed {seed} path {:?} attacker {}: convicted {convicted:?}, oracle {oracle:?}", m.path, m.attacker)
            })?;
            cases += 1;
            with_drops += usize::from(!oracle.is_empty());
        }
    }
    Ok(format!("{cases} layouts agree, {with_drops} with an observed drop"))
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    let mut runs = Vec::new();

    let t = Instant::now();
    report.record("C1", "sha256-conformance", t, FAST_BUDGET, sha256_conformance());
    let t = Instant::now();
    report.record("C2", "golden-grayhole", t, FAST_BUDGET, golden_grayhole());
    let t = Instant::now();
    report.record("C3", "pbh-state-machine", t, FAST_BUDGET, pbh_state_machine());
    let t = Instant::now();
    let outcome = soundness(&mut runs);
    report.record("C4", "soundness", t, SWEEP_BUDGET, outcome);
    let t = Instant::now();
    let outcome = dr_trend(&mut runs);
    report.record("C5", "dr-trend", t, SWEEP_BUDGET, outcome);
    let t = Instant::now();
    let outcome = pdr_benefit(&mut runs);
    report.record("C7", "pdr-benefit", t, SWEEP_BUDGET, outcome);
    let t = Instant::now();
    report.record("C6", "fnr-complement", t, FAST_BUDGET, complement_identity(&runs));
    let t = Instant::now();
    report.record("C8", "cooperative-coverage", t, COOP_BUDGET, cooperative_coverage());
    let t = Instant::now();
    report.record("C9", "determinism", t, SWEEP_BUDGET, determinism());
    let t = Instant::now();
    report.record("C10", "micro-oracle", t, MICRO_BUDGET, micro_oracle());

    if report.failures == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", report.failures);
        ExitCode::FAILURE
    }
}
