//! Command-line front end: `run`, `scaling`, `privacy-sweep`, `adapt` and
//! `validate`.
//!
//! Every command resolves its inputs completely before touching the output
//! directory, so a rejected config never leaves partial files behind.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::harness::{
    adaptation_experiment, privacy_sweep, run_episode_full, scaling_experiment, AdaptationReport, EpisodeOutput,
    PrivacyRow, RecoveryParams, ScalingParams, ScalingReport, ScenarioConfig,
};
use crate::routing::Router;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "hiercoord", version, about = "Hierarchical multi-agent coordination simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Replace the seed from the config file.
    #[arg(long)]
    pub seed_override: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one episode; writes metrics.csv, ledger.csv and meta.json.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Message totals versus population size; writes scaling.csv and slopes.json.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "hierarchical,flat,centralized,random,greedy", value_parser = parse_router)]
        routers: Vec<Router>,
        /// Run grid points on a thread pool.
        #[arg(long)]
        parallel: bool,
    },
    /// Completion and loss across an epsilon grid; writes privacy.csv.
    PrivacySweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated epsilons; `inf` is the noise-free control.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2,5,inf", value_parser = parse_epsilon)]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        replicates: usize,
        #[arg(long)]
        parallel: bool,
    },
    /// Recovery after a domain shift, with and without sharing; writes adaptation.csv.
    Adapt {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "hierarchical,flat,centralized,random,greedy", value_parser = parse_router)]
        routers: Vec<Router>,
        #[arg(long, default_value_t = 5)]
        replicates: usize,
        #[arg(long)]
        parallel: bool,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_epsilon(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let v = if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        f64::INFINITY
    } else {
        t.parse::<f64>().map_err(|e| format!("bad epsilon {t:?}: {e}"))?
    };
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("epsilon must be > 0, got {t}"))
    }
}

fn parse_router(s: &str) -> std::result::Result<Router, String> {
    Router::ALL
        .into_iter()
        .find(|r| r.as_str() == s.trim())
        .ok_or_else(|| format!("unknown router {s:?}"))
}

/// `%.9g`: nine significant digits, trailing zeros dropped, exponent form
/// outside [1e-4, 1e9).
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa.to_string()), exp.abs())
    }
}

fn load_config(path: &Path, seed_override: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes all files at once, after every computation has succeeded.
fn write_outputs(dir: &Path, files: Vec<(&str, Vec<u8>)>) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

fn json_bytes(value: &serde_json::Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn metrics_csv(out: &EpisodeOutput) -> Result<Vec<u8>> {
    csv_bytes(
        &["round", "released", "succeeded", "failed", "unassigned", "mean_task_loss", "clusters", "messages"],
        out.metrics.rounds.iter().map(|r| {
            vec![
                r.round.to_string(),
                r.released.to_string(),
                r.succeeded.to_string(),
                r.failed.to_string(),
                r.unassigned.to_string(),
                fmt_float(r.mean_task_loss),
                r.clusters.to_string(),
                r.messages.to_string(),
            ]
        }),
    )
}

pub fn ledger_csv(out: &EpisodeOutput) -> Result<Vec<u8>> {
    csv_bytes(
        &["round", "category", "count", "latency_sum"],
        out.ledger.rows().map(|(round, cat, c)| {
            vec![round.to_string(), cat.as_str().to_string(), c.count.to_string(), fmt_float(c.latency_sum)]
        }),
    )
}

/// Non-finite floats become strings so the JSON stays valid.
fn json_float(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(fmt_float(x))
    }
}

pub fn meta_json(config: &ScenarioConfig, out: &EpisodeOutput) -> Result<Vec<u8>> {
    let m = &out.metrics;
    let messages: BTreeMap<&str, u64> = m.messages.iter().map(|(c, n)| (c.as_str(), *n)).collect();
    let mut config_value = serde_json::to_value(config)?;
    if let Some(p) = config_value.get_mut("privacy") {
        p["epsilon"] = json_float(config.privacy.epsilon);
        p["epsilon_max"] = json_float(config.privacy.epsilon_max);
    }
    json_bytes(&json!({
        "version": ARTIFACT_VERSION,
        "seed": config.seed,
        "config": config_value,
        "summary": {
            "router": m.router.as_str(),
            "completion_rate": json_float(m.completion_rate),
            "unassigned_rate": json_float(m.unassigned_rate),
            "released": m.released,
            "succeeded": m.succeeded,
            "failed": m.failed,
            "unassigned": m.unassigned,
            "messages_total": m.messages_total,
            "messages": messages,
            "mean_task_latency": json_float(m.mean_task_latency),
            "final_task_loss": json_float(m.final_task_loss),
            "epsilon_spent_mean": json_float(m.epsilon_spent_mean()),
            "sharing_events": m.sharing_events,
            "final_clusters": out.clustering.as_ref().map(|c| c.len()),
        },
    }))
}

pub fn scaling_csv(report: &ScalingReport) -> Result<Vec<u8>> {
    csv_bytes(
        &["router", "n", "messages_total", "messages_intra", "messages_inter"],
        report.rows.iter().map(|r| {
            vec![
                r.router.as_str().to_string(),
                r.n.to_string(),
                r.messages_total.to_string(),
                r.messages_intra.to_string(),
                r.messages_inter.to_string(),
            ]
        }),
    )
}

pub fn slopes_json(report: &ScalingReport) -> Result<Vec<u8>> {
    let map: serde_json::Map<String, serde_json::Value> = report
        .fits
        .iter()
        .map(|(r, f)| (r.as_str().to_string(), json!({ "slope": f.slope, "r2": f.r2 })))
        .collect();
    json_bytes(&serde_json::Value::Object(map))
}

pub fn privacy_csv(rows: &[PrivacyRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["epsilon", "delta", "completion_rate", "mean_task_loss", "epsilon_spent_mean"],
        rows.iter().map(|r| {
            vec![
                fmt_float(r.epsilon),
                fmt_float(r.delta),
                fmt_float(r.completion_rate),
                fmt_float(r.mean_task_loss),
                fmt_float(r.epsilon_spent_mean),
            ]
        }),
    )
}

pub fn adaptation_csv(report: &AdaptationReport) -> Result<Vec<u8>> {
    let shift = report.shift_round.map(|s| s.to_string()).unwrap_or_default();
    csv_bytes(
        &["router", "sharing", "seed", "shift_round", "recovery_rounds"],
        report.rows.iter().map(|r| {
            vec![
                r.router.as_str().to_string(),
                r.sharing.to_string(),
                r.seed.to_string(),
                shift.clone(),
                r.recovery_rounds.map(|x| x.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

/// Executes one parsed command.
pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { common } => {
            let cfg = load_config(&common.config, common.seed_override)?;
            let out = run_episode_full(&cfg)?;
            let files = vec![
                ("metrics.csv", metrics_csv(&out)?),
                ("ledger.csv", ledger_csv(&out)?),
                ("meta.json", meta_json(&cfg, &out)?),
            ];
            write_outputs(&common.out, files)?;
            println!(
                "completion_rate={} messages_total={}",
                fmt_float(out.metrics.completion_rate),
                out.metrics.messages_total
            );
        }
        Command::Scaling {
            common,
            sizes,
            routers,
            parallel,
        } => {
            let cfg = load_config(&common.config, common.seed_override)?;
            let report = scaling_experiment(&sizes, &cfg, &routers, &ScalingParams::default(), parallel)?;
            write_outputs(
                &common.out,
                vec![("scaling.csv", scaling_csv(&report)?), ("slopes.json", slopes_json(&report)?)],
            )?;
            for (r, f) in &report.fits {
                println!("{r}: slope={} r2={}", fmt_float(f.slope), fmt_float(f.r2));
            }
        }
        Command::PrivacySweep {
            common,
            epsilons,
            replicates,
            parallel,
        } => {
            let cfg = load_config(&common.config, common.seed_override)?;
            let rows = privacy_sweep(&epsilons, &cfg, replicates, parallel)?;
            write_outputs(&common.out, vec![("privacy.csv", privacy_csv(&rows)?)])?;
            println!("{} rows", rows.len());
        }
        Command::Adapt {
            common,
            routers,
            replicates,
            parallel,
        } => {
            let mut cfg = load_config(&common.config, common.seed_override)?;
            if cfg.domain_shift_round.is_none() {
                cfg.domain_shift_round = Some(cfg.rounds / 2);
                cfg.validate()?;
            }
            let report = adaptation_experiment(&cfg, &routers, replicates, &RecoveryParams::default(), parallel)?;
            write_outputs(&common.out, vec![("adaptation.csv", adaptation_csv(&report)?)])?;
            let horizon = cfg.rounds - report.shift_round.unwrap_or(0);
            for &r in &routers {
                let on = report.median(r, true, horizon).unwrap_or(f64::NAN);
                let off = report.median(r, false, horizon).unwrap_or(f64::NAN);
                println!("{r}: median recovery sharing={} no_sharing={}", fmt_float(on), fmt_float(off));
            }
        }
        Command::Validate { config } => {
            ScenarioConfig::load(&config)?;
            println!("ok");
        }
    }
    Ok(())
}

/// Exit status for an error: 2 for config rejection, 3 for a runtime
/// invariant violation, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Invariant(_) => 3,
        _ => 1,
    }
}

/// Parses `std::env::args`, runs the command and returns the exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
