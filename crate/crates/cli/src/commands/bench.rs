//! `lumenav bench`: per-step inference timing of the policy forward pass
//! and the window search, plus the scaling sweeps over the lattice
//! resolution and the rollout horizon.

use crate::config::ExperimentConfig;
use crate::manifest::write_manifest;
use crate::output::write_json;
use anyhow::Result;
use lumenav_core::agent::{ControlMode, Episode, Scenario};
use lumenav_core::dwa::{select_velocity, wall_from_cloud, DwaConfig, DwaWeights};
use lumenav_core::env::wall_hit_points;
use lumenav_core::learner::Mlp;
use lumenav_core::Vec3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Serialize)]
pub struct TimingStat {
    pub mean_ms: f64,
    pub std_ms: f64,
    pub samples: usize,
}

#[derive(Debug, Serialize)]
pub struct ResolutionTiming {
    pub n: usize,
    pub rl: TimingStat,
    pub dwa: TimingStat,
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub value: usize,
    pub mean_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub resolutions: Vec<ResolutionTiming>,
    pub m_sweep: Vec<SweepPoint>,
    pub m_exponent: f64,
    pub p_sweep: Vec<SweepPoint>,
    pub p_exponent: f64,
    /// Relative spread of the policy forward time across resolutions.
    pub rl_relative_spread: f64,
    pub steps_per_resolution: usize,
    pub warmup_discarded: usize,
}

/// Representative (position, velocity, scan cloud, goal) snapshots taken
/// from a neutral-policy rollout, cycled through the timed loops.
struct BenchStates {
    positions: Vec<Vec3>,
    velocities: Vec<Vec3>,
    clouds: Vec<Vec<Vec3>>,
    observations: Vec<Vec<f64>>,
    goal: Vec3,
}

fn collect_states(scenario: &Scenario, max_states: usize) -> Result<BenchStates> {
    let mut ep = Episode::new(scenario, 0, ControlMode::RlDwa, 0.0, 99);
    let mut out = BenchStates {
        positions: Vec::new(),
        velocities: Vec::new(),
        clouds: Vec::new(),
        observations: Vec::new(),
        goal: ep.current_waypoint(),
    };
    while !ep.done() && out.positions.len() < max_states {
        let obs = ep.observe()?.to_vec();
        let scan = ep.sensed_scan()?.to_vec();
        let state = *ep.state();
        out.positions.push(state.p);
        out.velocities.push(state.v);
        out.clouds.push(wall_hit_points(state.p, state.q, &scenario.rig, &scan));
        out.observations.push(obs);
        ep.step(&[0.0; 8])?;
    }
    anyhow::ensure!(!out.positions.is_empty(), "no states collected");
    Ok(out)
}

fn stats(samples: &[f64]) -> TimingStat {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    TimingStat { mean_ms: mean * 1e3, std_ms: var.sqrt() * 1e3, samples: samples.len() }
}

/// Least-squares slope of log(time) against log(value).
fn loglog_slope(points: &[SweepPoint]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.value as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_ms.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn time_dwa(
    states: &BenchStates,
    limits: &lumenav_core::kinematics::KinematicLimits,
    dwa: &DwaConfig,
    reps: usize,
    warmup: usize,
) -> Vec<f64> {
    let weights = DwaWeights::new(0.5, 0.5, 0.5, 0.5);
    let mut samples = Vec::with_capacity(reps);
    for i in 0..reps + warmup {
        let k = i % states.positions.len();
        let wall = wall_from_cloud(&states.clouds[k]);
        let t0 = Instant::now();
        let r = select_velocity(
            states.positions[k],
            states.velocities[k],
            &weights,
            states.goal,
            &wall,
            limits,
            dwa,
        )
        .expect("window never empty");
        let dt = t0.elapsed().as_secs_f64();
        std::hint::black_box(r.score);
        if i >= warmup {
            samples.push(dt);
        }
    }
    samples
}

pub fn measure(cfg: &ExperimentConfig, steps: usize, warmup: usize) -> Result<BenchReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut resolutions = Vec::new();
    for n in [15usize, 25, 50] {
        let scenario = cfg.build_scenario_with_n(n)?;
        let states = collect_states(&scenario, 200)?;

        // policy forward pass at this observation width
        let mut actor_sizes = vec![scenario.observation_dim()];
        actor_sizes.extend_from_slice(&cfg.sac.hidden);
        actor_sizes.push(2 * ControlMode::RlDwa.action_dim());
        let policy = Mlp::new(&actor_sizes, &mut rng);
        let mut rl_samples = Vec::with_capacity(steps);
        for i in 0..steps + warmup {
            let obs = &states.observations[i % states.observations.len()];
            let t0 = Instant::now();
            let out = policy.forward(obs).expect("dims match");
            let dt = t0.elapsed().as_secs_f64();
            std::hint::black_box(out[0]);
            if i >= warmup {
                rl_samples.push(dt);
            }
        }

        let dwa_samples = time_dwa(&states, &scenario.limits, &scenario.dwa, steps, warmup);
        resolutions.push(ResolutionTiming {
            n,
            rl: stats(&rl_samples),
            dwa: stats(&dwa_samples),
        });
        eprintln!(
            "n={n}: rl {:.4} ms, dwa {:.4} ms",
            resolutions.last().unwrap().rl.mean_ms,
            resolutions.last().unwrap().dwa.mean_ms
        );
    }

    // lattice-resolution sweep at fixed N
    let scenario = cfg.build_scenario_with_n(50)?;
    let states = collect_states(&scenario, 200)?;
    let sweep_reps = (steps / 4).max(500);
    let mut m_sweep = Vec::new();
    for m in [3usize, 5, 7] {
        let dwa = DwaConfig { samples_per_axis: m, ..scenario.dwa.clone() };
        let samples = time_dwa(&states, &scenario.limits, &dwa, sweep_reps, warmup.min(100));
        m_sweep.push(SweepPoint { value: m, mean_ms: stats(&samples).mean_ms });
    }
    let m_exponent = loglog_slope(&m_sweep);
    eprintln!("lattice sweep exponent {m_exponent:.2}");

    // horizon sweep: P = horizon / dt
    let mut p_sweep = Vec::new();
    for p in [3usize, 6, 12] {
        let dwa = DwaConfig {
            horizon: scenario.dwa.dt * p as f64,
            ..scenario.dwa.clone()
        };
        let samples = time_dwa(&states, &scenario.limits, &dwa, sweep_reps, warmup.min(100));
        p_sweep.push(SweepPoint { value: p, mean_ms: stats(&samples).mean_ms });
    }
    let p_exponent = loglog_slope(&p_sweep);
    eprintln!("horizon sweep exponent {p_exponent:.2}");

    let rl_means: Vec<f64> = resolutions.iter().map(|r| r.rl.mean_ms).collect();
    let rl_min = rl_means.iter().cloned().fold(f64::INFINITY, f64::min);
    let rl_max = rl_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(BenchReport {
        resolutions,
        m_sweep,
        m_exponent,
        p_sweep,
        p_exponent,
        rl_relative_spread: (rl_max - rl_min) / rl_min,
        steps_per_resolution: steps,
        warmup_discarded: warmup,
    })
}

pub fn run(cfg: &ExperimentConfig, out: &Path, steps: usize) -> Result<()> {
    std::fs::create_dir_all(out)?;
    write_manifest(out, "bench", cfg, None)?;
    let report = measure(cfg, steps, 100)?;
    write_json(&out.join("bench_report.json"), &report)?;
    Ok(())
}
