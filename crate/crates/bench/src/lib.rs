//! Fixtures shared by the benchmarks.

use grayguard_core::config::ScenarioConfig;

/// A default-density scenario shortened to `seconds` of simulated time.
pub fn scenario(nodes: usize, ratio: f64, seconds: f64) -> ScenarioConfig {
    ScenarioConfig { node_count: nodes, malicious_ratio: ratio, sim_time_s: seconds, ..ScenarioConfig::default() }
}

/// Challenge payloads of increasing size.
pub fn payloads() -> Vec<Vec<u8>> {
    [32usize, 1024, 64 * 1024].iter().map(|&n| (0..n).map(|i| (i % 251) as u8).collect()).collect()
}
