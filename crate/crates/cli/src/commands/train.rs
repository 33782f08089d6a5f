//! `lumenav train`: one session per configured seed, with learning-curve
//! CSVs, checkpoints, resumable snapshots and a cross-seed summary.

use super::UsageError;
use crate::config::{ExperimentConfig, Method};
use crate::manifest::write_manifest;
use crate::output::{write_curve_csv, write_json};
use anyhow::{Context, Result};
use lumenav_core::agent::{train, train_from_state, ControlMode, TrainConfig, TrainState};
use lumenav_core::learner::save_mlp;
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Serialize)]
struct SeedSummary {
    seed: u64,
    episodes: usize,
    steps: usize,
    final_decile_mean_reward: f64,
    auc: f64,
    curve: String,
    checkpoint: String,
    aborted: Option<String>,
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    method: String,
    n: usize,
    seeds: Vec<SeedSummary>,
    mean_final_decile_reward: f64,
    std_final_decile_reward: f64,
    mean_auc: f64,
    std_auc: f64,
}

pub fn control_mode(method: Method) -> Result<ControlMode> {
    match method {
        Method::RlDwa => Ok(ControlMode::RlDwa),
        Method::Rl => Ok(ControlMode::PureRl),
        Method::ModelBased => {
            Err(UsageError("the model-based method has no training stage".into()).into())
        }
    }
}

fn final_decile_mean(curve: &[lumenav_core::agent::CurvePoint]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    let k = (curve.len() / 10).max(1);
    curve[curve.len() - k..].iter().map(|c| c.episode_reward).sum::<f64>() / k as f64
}

pub fn run(cfg: &ExperimentConfig, out: &Path, resume: Option<&Path>) -> Result<()> {
    let mode = control_mode(cfg.run.method)?;
    let scenario = cfg.build_scenario()?;
    std::fs::create_dir_all(out)?;
    write_manifest(out, "train", cfg, None)?;

    let mut seed_summaries = Vec::new();
    for &seed in &cfg.run.seeds {
        let seed_dir = out.join(format!("train_seed{seed}"));
        std::fs::create_dir_all(&seed_dir)?;
        let train_cfg = TrainConfig {
            sac: cfg.sac.clone(),
            total_steps: cfg.run.total_steps,
            seed,
            mode,
            noise_sigma: 0.0,
            snapshot_every: cfg.run.snapshot_every,
            checkpoint_dir: Some(seed_dir.clone()),
        };
        let output = match resume {
            Some(snapshot_path) if cfg.run.seeds.len() == 1 => {
                let text = std::fs::read_to_string(snapshot_path)
                    .with_context(|| format!("reading snapshot {}", snapshot_path.display()))?;
                let state: TrainState = serde_json::from_str(&text).context("parsing snapshot")?;
                eprintln!(
                    "resuming seed {seed} from step {} toward {}",
                    state.global_step, cfg.run.total_steps
                );
                train_from_state(&scenario, &train_cfg, state)?
            }
            Some(_) => {
                return Err(UsageError("--resume requires a single seed in run.seeds".into()).into())
            }
            None => train(&scenario, &train_cfg)?,
        };

        let curve_path = seed_dir.join("curve.csv");
        write_curve_csv(&curve_path, &output.state.curve)?;
        let ckpt_path = seed_dir.join("checkpoint_final.mlp");
        save_mlp(output.state.sac.actor(), &ckpt_path)
            .map_err(|e| anyhow::anyhow!("saving checkpoint: {e}"))?;
        let snapshot_path = seed_dir.join("train_state.json");
        std::fs::write(&snapshot_path, serde_json::to_string(&output.state)?)?;

        if let Some(reason) = &output.aborted {
            eprintln!("seed {seed}: training aborted: {reason}");
        }
        seed_summaries.push(SeedSummary {
            seed,
            episodes: output.state.episodes,
            steps: output.state.global_step,
            final_decile_mean_reward: final_decile_mean(&output.state.curve),
            auc: output.state.curve.last().map(|c| c.auc_so_far).unwrap_or(0.0),
            curve: curve_path.display().to_string(),
            checkpoint: ckpt_path.display().to_string(),
            aborted: output.aborted.clone(),
        });
        eprintln!(
            "seed {seed}: {} episodes, final-decile reward {:.2}",
            seed_summaries.last().unwrap().episodes,
            seed_summaries.last().unwrap().final_decile_mean_reward
        );
    }

    let rewards: Vec<f64> = seed_summaries.iter().map(|s| s.final_decile_mean_reward).collect();
    let aucs: Vec<f64> = seed_summaries.iter().map(|s| s.auc).collect();
    let summary = TrainSummary {
        method: cfg.run.method.as_str().to_string(),
        n: cfg.run.n,
        mean_final_decile_reward: mean(&rewards),
        std_final_decile_reward: std(&rewards),
        mean_auc: mean(&aucs),
        std_auc: std(&aucs),
        seeds: seed_summaries,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}
