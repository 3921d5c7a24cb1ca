//! `grayguard`: run single simulations or ratio/seed sweeps from a JSON config.

use std::fs;
use std::io::Write;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use grayguard_core::config::ScenarioConfig;
use grayguard_core::experiment::{parse_ratios, run_scenario_with, run_sweep, CSV_HEADER};
use grayguard_core::network::LogOptions;
use grayguard_core::trust::TABLE_CSV_HEADER;
use grayguard_core::ConfigError;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "grayguard", version, about = "Gray hole defense simulator for ad-hoc on-demand routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write a one-row CSV report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        defense: Option<Switch>,
        /// CSV report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Packet trace (`time,type,from,to,detail`); stdout when no path is given.
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        trace: Option<PathBuf>,
        /// Full run report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Final monitoring tables of every node.
        #[arg(long)]
        tables: Option<PathBuf>,
        #[arg(long)]
        probe_log: Option<PathBuf>,
        #[arg(long)]
        detection_log: Option<PathBuf>,
        #[arg(long)]
        quarantine_log: Option<PathBuf>,
    },
    /// Run every (ratio, seed) pair and write per-run plus mean rows.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `start:end:step` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "0:0.30:0.05")]
        ratios: String,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a built-in scenario preset (1-4) as JSON.
    Preset { number: u8 },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match panic::catch_unwind(panic::AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Config(e))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Ok(Err(Failure::Runtime(e))) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(_) => ExitCode::from(EXIT_RUNTIME),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config, seed, defense, out, trace, json, tables, probe_log, detection_log, quarantine_log } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = defense {
                cfg.defense = matches!(d, Switch::On);
            }
            let logs = probe_log.is_some() || detection_log.is_some() || quarantine_log.is_some();
            let opts = LogOptions { trace: trace.is_some(), logs };
            let output = run_scenario_with(&cfg, opts)?;
            let report = &output.report;
            emit(out.as_deref(), &format!("{CSV_HEADER}\n{}\n", report.csv_row()))?;
            if let Some(path) = trace {
                let mut text = String::from("time,type,from,to,detail\n");
                for rec in &output.logs.trace {
                    text.push_str(&rec.line());
                    text.push('\n');
                }
                emit(Some(&path).filter(|p| p.as_os_str() != "-").map(PathBuf::as_path), &text)?;
            }
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(report).context("serializing report").map_err(Failure::Runtime)?;
                emit(Some(&path), &(text + "\n"))?;
            }
            if let Some(path) = tables {
                emit(Some(&path), &format!("{TABLE_CSV_HEADER}\n{}", output.tables_csv))?;
            }
            let sections = [
                (probe_log, "probe_id,route,round,ack_blocks,p_bh,verdict", &output.logs.probes),
                (detection_log, "session,route,hop_verdicts,challenge,outcome", &output.logs.detections),
                (quarantine_log, "time,issuer,convicted", &output.logs.quarantine),
            ];
            for (path, header, lines) in sections {
                if let Some(path) = path {
                    let mut text = format!("{header}\n");
                    for l in lines {
                        text.push_str(l);
                        text.push('\n');
                    }
                    emit(Some(&path), &text)?;
                }
            }
            Ok(())
        }
        Command::Sweep { config, ratios, seeds, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let ratios = parse_ratios(&ratios)?;
            if seeds == 0 {
                return Err(Failure::Config(anyhow::anyhow!("--seeds must be at least 1")));
            }
            let result = run_sweep(&cfg, &ratios, seeds)?;
            emit(out.as_deref(), &result.to_csv())
        }
        Command::Preset { number } => {
            let cfg = ScenarioConfig::preset(number)
                .ok_or_else(|| Failure::Config(anyhow::anyhow!("no preset {number}; choose 1-4")))?;
            let text = serde_json::to_string_pretty(&cfg).context("serializing preset").map_err(Failure::Runtime)?;
            emit(None, &(text + "\n"))
        }
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let result = match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    };
    result.map_err(Failure::Runtime)
}
