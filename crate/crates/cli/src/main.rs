//! Command-line front end: protocol runs, detection experiments, key-rate
//! curves and efficiency reports, all deterministic under an explicit seed.
//!
//! Exit codes: 0 on success, 1 on usage or tool failure, 2 when a simulated
//! protocol run aborts at the eavesdropping check (a protocol outcome, not a
//! tool error).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use cluster_qkd::attacks::{detection_experiment, parse_attack_spec};
use cluster_qkd::keyrate::{curve_to_csv, key_rate_curve, noise_threshold_record};
use cluster_qkd::protocol::{
    empirical_efficiency, qubit_efficiency, run_protocol, transcript_to_string, ProtocolConfig,
    RunSummary,
};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_ABORTED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "cluster-qkd",
    version,
    about = "Simulator and key-rate analysis for a three-party cluster-state QKD protocol"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol and write the transcript, summary and manifest.
    Simulate {
        /// Batch scale; the run covers round(4n(1+epsilon)) rounds.
        #[arg(long)]
        n: u64,
        /// Oversampling factor.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Run seed; falls back to QKD_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Attack spec, e.g. none, intercept-resend, depolarizing:0.05,
        /// collective:seed=11.
        #[arg(long, default_value = "none")]
        attack: String,
        /// Fraction of case 1-3 positions disclosed for checking.
        #[arg(long = "check-fraction", default_value_t = 0.5)]
        check_fraction: f64,
        /// Per-case error rate above which the run aborts.
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        /// Output directory (defaults to the working directory).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate the key-rate bound: curve over a grid and/or the threshold.
    Keyrate {
        #[arg(long, default_value_t = 0.0)]
        qmin: f64,
        #[arg(long, default_value_t = 0.12)]
        qmax: f64,
        #[arg(long, default_value_t = 241)]
        steps: usize,
        /// Output directory for curve.csv and threshold.txt (defaults to the
        /// working directory).
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Only solve for the noise threshold and print it.
        #[arg(long = "threshold-only")]
        threshold_only: bool,
    },
    /// Compare analytic and Monte-Carlo detection probabilities.
    Detect {
        /// intercept-resend, measure-resend or measure-resend-bell.
        #[arg(long)]
        attack: String,
        /// Checked positions per trial.
        #[arg(long)]
        positions: u32,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Report the qubit efficiency.
    Efficiency {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Also measure the efficiency of a seeded run.
        #[arg(long)]
        empirical: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successful exits; everything else is usage
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Simulate {
            n,
            epsilon,
            seed,
            attack,
            check_fraction,
            threshold,
            out,
        } => cmd_simulate(n, epsilon, seed, &attack, check_fraction, threshold, &out),
        Command::Keyrate {
            qmin,
            qmax,
            steps,
            out,
            threshold_only,
        } => cmd_keyrate(qmin, qmax, steps, &out, threshold_only),
        Command::Detect {
            attack,
            positions,
            trials,
            seed,
        } => cmd_detect(&attack, positions, trials, seed),
        Command::Efficiency { n, seed, empirical } => cmd_efficiency(n, seed, empirical),
    }
}

/// --seed, then QKD_SEED, then 0.
fn resolve_seed(flag: Option<u64>) -> anyhow::Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("QKD_SEED") {
        Ok(raw) => raw
            .trim()
            .parse()
            .with_context(|| format!("QKD_SEED={raw:?} is not a valid seed")),
        Err(_) => Ok(0),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config: serde_json::Value,
    attack: Option<&str>,
    outputs: &[&str],
) -> anyhow::Result<()> {
    let manifest = serde_json::json!({
        "command": command,
        "config": config,
        "attack": attack,
        "outputs": outputs,
        "tool_version": env!("CARGO_PKG_VERSION"),
    });
    write_file(dir, "manifest.json", &format!("{manifest:#}\n"))
}

fn cmd_simulate(
    n: u64,
    epsilon: f64,
    seed: Option<u64>,
    attack_spec: &str,
    check_fraction: f64,
    threshold: f64,
    out: &Path,
) -> anyhow::Result<u8> {
    let seed = resolve_seed(seed)?;
    let config = ProtocolConfig::new(n, epsilon, check_fraction, threshold, seed)?;
    let attack = parse_attack_spec(attack_spec)?;
    let (records, outcome) = run_protocol(&config, &attack)?;
    let summary = RunSummary::new(&config, attack_spec, &outcome);

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(out, "transcript.jsonl", &transcript_to_string(&records))?;
    write_file(out, "summary.txt", &summary.to_text())?;
    write_manifest(
        out,
        "simulate",
        serde_json::json!({
            "n": n,
            "epsilon": epsilon,
            "seed": seed,
            "check_fraction": check_fraction,
            "error_threshold": threshold,
            "rounds": config.num_rounds(),
        }),
        Some(attack_spec),
        &["transcript.jsonl", "summary.txt", "manifest.json"],
    )?;

    println!("{}", summary.to_text().trim_end());
    if outcome.aborted {
        eprintln!("protocol aborted: a case error rate exceeded {threshold}");
        Ok(EXIT_ABORTED)
    } else {
        Ok(EXIT_OK)
    }
}

fn threshold_text() -> anyhow::Result<String> {
    let record = noise_threshold_record()?;
    Ok(format!(
        "threshold = {}\nbracket_width = {}\niterations = {}\n",
        record.threshold, record.bracket_width, record.iterations
    ))
}

fn cmd_keyrate(
    qmin: f64,
    qmax: f64,
    steps: usize,
    out: &Path,
    threshold_only: bool,
) -> anyhow::Result<u8> {
    if threshold_only {
        print!("{}", threshold_text()?);
        return Ok(EXIT_OK);
    }
    let curve = key_rate_curve(qmin, qmax, steps)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(out, "curve.csv", &curve_to_csv(&curve))?;
    write_file(out, "threshold.txt", &threshold_text()?)?;
    write_manifest(
        out,
        "keyrate",
        serde_json::json!({ "qmin": qmin, "qmax": qmax, "steps": steps }),
        None,
        &["curve.csv", "threshold.txt", "manifest.json"],
    )?;
    println!("wrote {} curve points to {}", curve.len(), out.display());
    Ok(EXIT_OK)
}

fn cmd_detect(
    attack_spec: &str,
    positions: u32,
    trials: u64,
    seed: Option<u64>,
) -> anyhow::Result<u8> {
    let seed = resolve_seed(seed)?;
    let attack = parse_attack_spec(attack_spec)?;
    let report = detection_experiment(&attack, positions, trials, seed)?;
    println!("attack = {}", report.attack);
    println!("positions = {}", report.positions);
    println!("trials = {}", report.trials);
    println!("seed = {seed}");
    println!("analytic_detection = {}", report.analytic_detection);
    println!("empirical_detection = {}", report.empirical_detection);
    println!("detection_ci95_low = {}", report.detection_ci95.0);
    println!("detection_ci95_high = {}", report.detection_ci95.1);
    println!("per_position_rate = {}", report.per_position_rate);
    println!("total_positions = {}", report.total_positions);
    Ok(EXIT_OK)
}

fn cmd_efficiency(n: u64, seed: Option<u64>, empirical: bool) -> anyhow::Result<u8> {
    let seed = resolve_seed(seed)?;
    let config = ProtocolConfig::with_defaults(n, seed)?;
    let eta = qubit_efficiency(&config)?;
    println!("n = {n}");
    println!("analytic_efficiency = {eta}");
    println!("analytic_efficiency_value = {}", eta.value());
    if empirical {
        println!("seed = {seed}");
        println!("empirical_efficiency = {}", empirical_efficiency(n, seed)?);
    }
    Ok(EXIT_OK)
}
