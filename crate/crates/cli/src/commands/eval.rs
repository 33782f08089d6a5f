//! `lumenav eval` and `lumenav noise-sweep`: trial fan-out over all
//! waypoint sequences, per-episode CSV logs, and Table-style summaries.

use super::UsageError;
use crate::config::{ExperimentConfig, Method};
use crate::manifest::write_manifest;
use crate::output::{write_episode_csv, write_json, SummaryRow};
use anyhow::{Context, Result};
use lumenav_core::agent::{run_episode, ControlMode, Episode, Scenario};
use lumenav_core::baselines::run_model_based_episode;
use lumenav_core::env::SequenceLabel;
use lumenav_core::learner::{load_mlp, Mlp};
use lumenav_core::metrics::EpisodeReport;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Serialize)]
struct EpisodeMeta {
    file: String,
    sequence: usize,
    scenario: String,
    trial: usize,
    sigma: f64,
    p_pct: f64,
    v_pct: f64,
    outcome: String,
    steps: usize,
    total_reward: f64,
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    rows: Vec<SummaryRow>,
}

/// Deterministic per-trial seed, distinct across sequences and trials.
fn trial_seed(base: u64, seq: usize, trial: usize) -> u64 {
    base.wrapping_add(1_000_000 * seq as u64).wrapping_add(trial as u64)
}

pub struct TrialRun {
    pub seq: usize,
    pub trial: usize,
    pub report: EpisodeReport,
}

/// Runs `trials` episodes per sequence at one noise level.
pub fn run_trials(
    scenario: &Scenario,
    method: Method,
    actor: Option<&Mlp>,
    trials: usize,
    base_seed: u64,
    sigma: f64,
) -> Result<Vec<TrialRun>> {
    let mut out = Vec::new();
    for seq in 0..scenario.sequences.len() {
        for trial in 0..trials {
            let seed = trial_seed(base_seed, seq, trial);
            let report = match method {
                Method::RlDwa => run_episode(
                    scenario,
                    seq,
                    ControlMode::RlDwa,
                    actor.expect("checked by caller"),
                    sigma,
                    seed,
                )?,
                Method::Rl => run_episode(
                    scenario,
                    seq,
                    ControlMode::PureRl,
                    actor.expect("checked by caller"),
                    sigma,
                    seed,
                )?,
                Method::ModelBased => run_model_based_episode(scenario, seq, sigma, seed)
                    .map_err(|e| anyhow::anyhow!("model-based episode: {e}"))?,
            };
            out.push(TrialRun { seq, trial, report });
        }
    }
    Ok(out)
}

/// Builds seen/unseen/all rows for one (method, n, noise) cell.
pub fn summarize(
    scenario: &Scenario,
    method: Method,
    n: usize,
    noise_level: f64,
    sigma: f64,
    runs: &[TrialRun],
) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<&'static str, Vec<&EpisodeReport>> = BTreeMap::new();
    for r in runs {
        let label = match scenario.sequences[r.seq].0.label {
            SequenceLabel::Seen => "seen",
            SequenceLabel::Unseen => "unseen",
        };
        groups.entry(label).or_default().push(&r.report);
        groups.entry("all").or_default().push(&r.report);
    }
    let mut rows = Vec::new();
    for (label, reports) in groups {
        rows.push(SummaryRow::from_reports(
            method.as_str(),
            n,
            label,
            noise_level,
            sigma,
            &reports,
        ));
    }
    rows
}

pub fn load_actor(
    cfg: &ExperimentConfig,
    checkpoint: Option<&Path>,
) -> Result<Option<Mlp>> {
    match (cfg.run.method, checkpoint) {
        (Method::ModelBased, Some(_)) => Err(UsageError(
            "the model-based method takes no checkpoint".into(),
        )
        .into()),
        (Method::ModelBased, None) => Ok(None),
        (_, None) => {
            Err(UsageError("--checkpoint is required for learned methods".into()).into())
        }
        (_, Some(path)) => {
            let actor = load_mlp(path)
                .map_err(|e| anyhow::anyhow!("loading checkpoint {}: {e}", path.display()))?;
            Ok(Some(actor))
        }
    }
}

pub fn run(cfg: &ExperimentConfig, out: &Path, checkpoint: Option<&Path>) -> Result<()> {
    let actor = load_actor(cfg, checkpoint)?;
    let scenario = cfg.build_scenario()?;
    std::fs::create_dir_all(out)?;
    write_manifest(out, "eval", cfg, checkpoint)?;
    let episodes_dir = out.join("episodes");
    std::fs::create_dir_all(&episodes_dir)?;

    let base_seed = cfg.run.seeds[0];
    let runs = run_trials(&scenario, cfg.run.method, actor.as_ref(), cfg.run.trials, base_seed, 0.0)?;

    let mut metas = Vec::new();
    for r in &runs {
        let file = format!("ep_seq{}_trial{}.csv", r.seq, r.trial);
        write_episode_csv(&episodes_dir.join(&file), &r.report)
            .with_context(|| format!("writing {file}"))?;
        metas.push(EpisodeMeta {
            file,
            sequence: r.seq,
            scenario: scenario.sequences[r.seq].0.label.to_string(),
            trial: r.trial,
            sigma: 0.0,
            p_pct: r.report.p_pct,
            v_pct: r.report.v_pct,
            outcome: r.report.outcome.to_string(),
            steps: r.report.steps.len(),
            total_reward: r.report.total_reward,
        });
    }
    write_json(&out.join("episodes.json"), &metas)?;

    let rows = summarize(&scenario, cfg.run.method, cfg.run.n, 0.0, 0.0, &runs);
    for row in &rows {
        eprintln!(
            "{} n={} {}: p% {:.2}+-{:.2} (median {:.2}), V% {:.2}+-{:.2}, failures {}/{}",
            row.method,
            row.n,
            row.scenario,
            row.p_mean,
            row.p_std,
            row.p_median,
            row.v_mean,
            row.v_std,
            row.failures,
            row.episodes
        );
    }
    write_json(&out.join("summary.json"), &EvalSummary { rows })?;
    Ok(())
}

/// Mean scan reading over a zero-noise baseline episode, the reference
/// the noise levels are calibrated against.
pub fn calibrate_mean_scan(scenario: &Scenario, method: Method, actor: Option<&Mlp>) -> Result<f64> {
    let mode = match method {
        Method::Rl => ControlMode::PureRl,
        _ => ControlMode::RlDwa,
    };
    let mut ep = Episode::new(scenario, 0, mode, 0.0, 0);
    let mut total = 0.0;
    let mut count = 0usize;
    while !ep.done() {
        let scan = ep.sensed_scan()?.to_vec();
        total += scan.iter().sum::<f64>();
        count += scan.len();
        let raw = match (actor, mode) {
            (Some(a), _) => {
                let obs = ep.observe()?.to_vec();
                let outv = a.forward(&obs).map_err(|e| anyhow::anyhow!("{e}"))?;
                lumenav_core::learner::squash_mean(&outv[..mode.action_dim()])
            }
            (None, m) => vec![0.0; m.action_dim()],
        };
        ep.step(&raw)?;
    }
    if count == 0 {
        anyhow::bail!("baseline episode produced no scans");
    }
    Ok(total / count as f64)
}

#[derive(Debug, Serialize)]
struct NoiseSummary {
    /// Mean scan distance of the zero-noise baseline episode per N.
    calibration: BTreeMap<usize, f64>,
    rows: Vec<SummaryRow>,
}

/// Noise sweep across the configured levels; with `checkpoints_by_n`,
/// the sweep additionally covers every listed sensing resolution.
pub fn run_noise_sweep(
    cfg: &ExperimentConfig,
    out: &Path,
    checkpoint: Option<&Path>,
    checkpoints_by_n: &[(usize, std::path::PathBuf)],
) -> Result<()> {
    std::fs::create_dir_all(out)?;
    write_manifest(out, "noise-sweep", cfg, checkpoint)?;

    let mut plans: Vec<(usize, Option<Mlp>)> = Vec::new();
    if checkpoints_by_n.is_empty() {
        plans.push((cfg.run.n, load_actor(cfg, checkpoint)?));
    } else {
        if cfg.run.method == Method::ModelBased {
            return Err(UsageError("per-N checkpoints apply to learned methods only".into()).into());
        }
        for (n, path) in checkpoints_by_n {
            let actor = load_mlp(path)
                .map_err(|e| anyhow::anyhow!("loading checkpoint {}: {e}", path.display()))?;
            plans.push((*n, Some(actor)));
        }
    }

    let base_seed = cfg.run.seeds[0];
    let mut calibration = BTreeMap::new();
    let mut rows = Vec::new();
    for (n, actor) in &plans {
        let scenario = cfg.build_scenario_with_n(*n)?;
        let mean_scan = calibrate_mean_scan(&scenario, cfg.run.method, actor.as_ref())?;
        calibration.insert(*n, mean_scan);
        eprintln!("n={n}: baseline mean scan distance {mean_scan:.4}");

        let mut levels = vec![0.0];
        levels.extend_from_slice(&cfg.run.noise_levels);
        for level in levels {
            let sigma = level * mean_scan;
            let runs =
                run_trials(&scenario, cfg.run.method, actor.as_ref(), cfg.run.trials, base_seed, sigma)?;
            let cell = summarize(&scenario, cfg.run.method, *n, level, sigma, &runs);
            if let Some(all) = cell.iter().find(|r| r.scenario == "all") {
                eprintln!(
                    "n={n} noise {:.0}%: p% {:.2}, V% {:.2} ({} episodes)",
                    level * 100.0,
                    all.p_mean,
                    all.v_mean,
                    all.episodes
                );
            }
            rows.extend(cell);
        }
    }
    write_json(&out.join("summary.json"), &NoiseSummary { calibration, rows })?;
    Ok(())
}
