//! Experiment harness for the tube-network navigation stack.
//!
//! Exit codes: 0 on success, 2 on configuration/usage errors, 3 on
//! runtime failures.

mod commands;
mod config;
mod manifest;
mod output;

use anyhow::Result;
use clap::{Parser, Subcommand};
use commands::UsageError;
use config::ExperimentConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "lumenav", version, about = "Deformable-robot navigation experiments in procedural tube networks")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory override (also honored: LUMENAV_OUT).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured method, one session per seed.
    Train {
        /// Resume a single-seed session from a train_state.json snapshot.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate over all sequences with the configured trial fan-out.
    Eval {
        /// Actor checkpoint (.mlp) for the learned methods.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Calibrated Gaussian-noise sweep over the configured levels.
    NoiseSweep {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Extra per-resolution checkpoints as N=PATH (repeatable).
        #[arg(long = "checkpoint-for", value_parser = parse_n_checkpoint)]
        checkpoints_by_n: Vec<(usize, PathBuf)>,
    },
    /// Inference-time measurement and complexity sweeps.
    Bench {
        /// Timed steps per resolution (after warmup).
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
    },
    /// Generate the configured network and export its wall cloud.
    GenEnv {
        /// Points per cross-section ring in the export.
        #[arg(long, default_value_t = 16)]
        ring_points: usize,
    },
    /// Run one window search on a scene file and print JSON.
    PlanOnce {
        /// Scene description (TOML).
        #[arg(long)]
        scene: PathBuf,
    },
}

fn parse_n_checkpoint(s: &str) -> Result<(usize, PathBuf), String> {
    let (n, path) = s.split_once('=').ok_or_else(|| "expected N=PATH".to_string())?;
    let n: usize = n.parse().map_err(|e| format!("bad N: {e}"))?;
    Ok((n, PathBuf::from(path)))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| UsageError("--config is required for this subcommand".into()))?;
    ExperimentConfig::load(path).map_err(|e| UsageError(format!("{e:#}")).into())
}

fn resolve_output_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &cli.output_dir {
        return dir.clone();
    }
    if let Ok(dir) = std::env::var("LUMENAV_OUT") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    cfg.run.output_dir.clone()
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train { resume } => {
            let cfg = load_config(cli)?;
            let out = resolve_output_dir(cli, &cfg);
            commands::train::run(&cfg, &out, resume.as_deref())
        }
        Command::Eval { checkpoint } => {
            let cfg = load_config(cli)?;
            let out = resolve_output_dir(cli, &cfg);
            commands::eval::run(&cfg, &out, checkpoint.as_deref())
        }
        Command::NoiseSweep { checkpoint, checkpoints_by_n } => {
            let cfg = load_config(cli)?;
            let out = resolve_output_dir(cli, &cfg);
            commands::eval::run_noise_sweep(&cfg, &out, checkpoint.as_deref(), checkpoints_by_n)
        }
        Command::Bench { steps } => {
            let cfg = load_config(cli)?;
            let out = resolve_output_dir(cli, &cfg);
            commands::bench::run(&cfg, &out, *steps)
        }
        Command::GenEnv { ring_points } => {
            let cfg = load_config(cli)?;
            let out = resolve_output_dir(cli, &cfg);
            commands::genenv::run(&cfg, &out, *ring_points)
        }
        Command::PlanOnce { scene } => commands::plan::run(scene),
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.downcast_ref::<UsageError>().is_some() { 2 } else { 3 };
            std::process::exit(code);
        }
    }
}
