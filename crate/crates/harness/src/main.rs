use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use teleop_core::synth::Protocol;
use teleop_harness::commands;
use teleop_harness::config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "teleop",
    version,
    about = "EMG-to-robot-hand teleoperation experiments"
)]
struct Cli {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory (created if absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured method (1-4).
    #[arg(long, global = true)]
    method: Option<u8>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a training session and held-out test sessions.
    Synth {
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        rate: Option<f64>,
        /// hybrid, continuous, grasp_poses or wrist.
        #[arg(long)]
        protocol: Option<String>,
    },
    /// Train every model the method uses.
    Train,
    /// Score trained models on the test sessions.
    Eval,
    /// Run the controller and write trajectories.
    Run {
        /// Sessions to run; defaults to the test sessions.
        sessions: Vec<PathBuf>,
    },
    /// Methods 1, 2 and 4 side by side on the same sessions.
    Compare,
    /// Wrist-axis variance analysis.
    AnalyzeWrist,
}

fn parse_protocol(s: &str) -> anyhow::Result<Protocol> {
    Ok(
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            teleop_core::Error::InvalidConfig(format!(
                "unknown protocol `{s}` (hybrid, continuous, grasp_poses, wrist)"
            ))
        })?,
    )
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out_dir = o;
    }
    if let Some(m) = cli.method {
        cfg.method = m;
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    match cli.cmd {
        Cmd::Synth {
            duration,
            rate,
            protocol,
        } => {
            if let Some(d) = duration {
                cfg.synth.duration_s = d;
            }
            if let Some(r) = rate {
                cfg.synth.sample_rate_hz = r;
                cfg.filter.sample_rate_hz = r;
            }
            if let Some(p) = protocol {
                cfg.synth.protocol = Some(parse_protocol(&p)?);
            }
            for p in commands::synth(&cfg)? {
                println!("{}", p.display());
            }
        }
        Cmd::Train => {
            let s = commands::train(&cfg)?;
            for p in &s.files {
                println!("{}", p.display());
            }
        }
        Cmd::Eval => print!("{}", commands::eval(&cfg)?.to_text()),
        Cmd::Run { sessions } => {
            for p in commands::run(&cfg, &sessions)? {
                println!("{}", p.display());
            }
        }
        Cmd::Compare => print!("{}", commands::compare(&cfg)?.to_text()),
        Cmd::AnalyzeWrist => print!("{}", commands::analyze_wrist(&cfg)?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TELEOP_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!(
                "error kind={} message={message:?}",
                teleop_harness::error_kind(&e)
            );
            ExitCode::FAILURE
        }
    }
}
