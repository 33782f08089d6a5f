//! Off-policy training loop over episodes of the shared pipeline.

use super::episode::{ControlMode, Episode};
use super::replay::ReplayBuffer;
use super::sac::{Sac, SacConfig};
use super::{AgentError, Scenario};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub sac: SacConfig,
    pub total_steps: usize,
    pub seed: u64,
    pub mode: ControlMode,
    /// Scan-noise sigma during training (usually zero).
    pub noise_sigma: f64,
    /// Cadence of last-good snapshots, in environment steps.
    pub snapshot_every: usize,
    /// When set, actor checkpoints are written here at snapshot cadence.
    pub checkpoint_dir: Option<std::path::PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sac: SacConfig::default(),
            total_steps: 100_000,
            seed: 0,
            mode: ControlMode::RlDwa,
            noise_sigma: 0.0,
            snapshot_every: 10_000,
            checkpoint_dir: None,
        }
    }
}

/// One learning-curve record, written at each episode end.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub episode_reward: f64,
    pub auc_so_far: f64,
}

/// Serializable mid-training snapshot for resumption.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainState {
    pub sac: Sac,
    pub rng: ChaCha8Rng,
    pub global_step: usize,
    pub episodes: usize,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug)]
pub struct TrainOutput {
    pub state: TrainState,
    /// Set when training aborted on non-finite losses; the state then
    /// holds the last good snapshot.
    pub aborted: Option<String>,
}

/// Trains from scratch; see [`train_from_state`] for resumption.
pub fn train(scenario: &Scenario, cfg: &TrainConfig) -> Result<TrainOutput, AgentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sac = Sac::new(scenario.observation_dim(), cfg.mode.action_dim(), &cfg.sac, &mut rng);
    let state = TrainState { sac, rng, global_step: 0, episodes: 0, curve: Vec::new() };
    train_from_state(scenario, cfg, state)
}

/// Runs the training loop until `cfg.total_steps` environment steps,
/// starting from a fresh or restored snapshot.
///
/// Per episode a training sequence is drawn uniformly; transitions feed a
/// uniform replay buffer, and one gradient update runs every
/// `update_every` steps after warmup. Aborts on non-finite losses,
/// preserving the last good snapshot.
pub fn train_from_state(
    scenario: &Scenario,
    cfg: &TrainConfig,
    state: TrainState,
) -> Result<TrainOutput, AgentError> {
    let seen = scenario.seen_indices();
    if seen.is_empty() {
        return Err(AgentError::NoTrainingSequences);
    }
    let TrainState { mut sac, mut rng, mut global_step, mut episodes, mut curve } = state;
    let mut replay = ReplayBuffer::new(cfg.sac.replay_capacity);
    let action_dim = cfg.mode.action_dim();
    let mut last_good: Option<(Sac, usize)> = None;
    let mut aborted = None;
    let mut auc_acc = 0.0;
    let mut last_point: Option<(usize, f64)> = curve.last().map(|c| (c.step, c.episode_reward));
    if let Some(c) = curve.last() {
        auc_acc = c.auc_so_far;
    }

    'training: while global_step < cfg.total_steps {
        let seq_idx = seen[rng.gen_range(0..seen.len())];
        let ep_seed: u64 = rng.gen();
        let mut ep = Episode::new(scenario, seq_idx, cfg.mode, cfg.noise_sigma, ep_seed);
        while !ep.done() {
            let obs = ep.observe()?.to_vec();
            let raw: Vec<f64> = if global_step < cfg.sac.warmup_steps {
                (0..action_dim).map(|_| rng.gen_range(-0.999..0.999)).collect()
            } else {
                sac.sample_raw(&obs, &mut rng)?.0
            };
            let info = ep.step(&raw)?;
            replay.push(info.transition);
            global_step += 1;

            if global_step >= cfg.sac.warmup_steps
                && replay.len() >= cfg.sac.batch_size
                && global_step % cfg.sac.update_every == 0
            {
                let losses = sac.update(&replay, &mut rng)?;
                if !losses.all_finite() || !sac.all_params_finite() {
                    if let Some((snapshot, at)) = last_good.take() {
                        aborted = Some(format!(
                            "non-finite loss at step {global_step}; restored snapshot from step {at}"
                        ));
                        sac = snapshot;
                    } else {
                        aborted = Some(format!("non-finite loss at step {global_step}"));
                    }
                    break 'training;
                }
            }
            if cfg.snapshot_every > 0 && global_step % cfg.snapshot_every == 0 {
                last_good = Some((sac.clone(), global_step));
                if let Some(dir) = &cfg.checkpoint_dir {
                    let path = dir.join(format!("checkpoint_{global_step}.mlp"));
                    crate::learner::save_mlp(sac.actor(), &path)?;
                }
            }
            if global_step >= cfg.total_steps {
                break;
            }
        }
        episodes += 1;
        let reward = ep.total_reward();
        if let Some((ps, pr)) = last_point {
            if global_step > ps {
                auc_acc += 0.5 * (pr + reward) * (global_step - ps) as f64;
            }
        }
        last_point = Some((global_step, reward));
        curve.push(CurvePoint { step: global_step, episode_reward: reward, auc_so_far: auc_acc });
    }

    Ok(TrainOutput {
        state: TrainState { sac, rng, global_step, episodes, curve },
        aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_network, generate_sequences, LaserRig, NetworkSpec};
    use crate::kinematics::{KinematicLimits, RobotConfig};
    use crate::{Quat, Vec3};

    fn toy_scenario() -> Scenario {
        let spec = NetworkSpec {
            segments: 1,
            radius_min: 1.0,
            radius_max: 1.0,
            curvature_max: 0.0,
            branch_count: 0,
            segment_length: 10.0,
            seed: 0,
        };
        let net = generate_network(0, &spec).unwrap();
        let sequences = generate_sequences(&net, 2, 3, 0.3, 0, 0.5).unwrap();
        Scenario {
            net,
            sequences,
            rig: LaserRig::fibonacci(15, 4.0),
            limits: KinematicLimits::default(),
            robot: RobotConfig::default(),
            dwa: crate::dwa::DwaConfig::default(),
            reward: crate::agent::RewardConfig::default(),
            step_cap: 200,
            window_cap: 3.0,
            start_position: Vec3::new(0.5, 0.0, 0.0),
            start_orientation: Quat::identity(),
        }
    }

    fn smoke_cfg(steps: usize) -> TrainConfig {
        TrainConfig {
            sac: SacConfig {
                hidden: vec![16, 16],
                batch_size: 32,
                replay_capacity: 5_000,
                warmup_steps: 100,
                update_every: 4,
                ..SacConfig::default()
            },
            total_steps: steps,
            seed: 3,
            mode: ControlMode::RlDwa,
            noise_sigma: 0.0,
            snapshot_every: 500,
            checkpoint_dir: None,
        }
    }

    #[test]
    fn training_is_bit_deterministic() {
        let scenario = toy_scenario();
        let cfg = smoke_cfg(600);
        let a = train(&scenario, &cfg).unwrap();
        let b = train(&scenario, &cfg).unwrap();
        assert_eq!(a.state.curve.len(), b.state.curve.len());
        for (x, y) in a.state.curve.iter().zip(b.state.curve.iter()) {
            assert_eq!(x.step, y.step);
            assert_eq!(x.episode_reward.to_bits(), y.episode_reward.to_bits());
        }
        let wa = &a.state.sac.actor().layers()[0].weights;
        let wb = &b.state.sac.actor().layers()[0].weights;
        assert_eq!(wa, wb);
    }

    #[test]
    fn resume_continues_step_numbering() {
        let scenario = toy_scenario();
        let cfg = smoke_cfg(400);
        let first = train(&scenario, &cfg).unwrap();
        let reached = first.state.global_step;
        assert!(reached >= 400);
        let mut cfg2 = cfg.clone();
        cfg2.total_steps = 800;
        let resumed = train_from_state(&scenario, &cfg2, first.state).unwrap();
        assert!(resumed.state.global_step >= 800);
        // curve keeps monotone step numbering across the boundary
        let steps: Vec<usize> = resumed.state.curve.iter().map(|c| c.step).collect();
        assert!(steps.windows(2).all(|w| w[0] < w[1]));
    }
}
