//! The navigation MDP: observation/action encoding, reward, episode
//! stepping with the paper-style termination rules, and the soft
//! actor-critic training loop.

mod episode;
mod observe;
mod replay;
mod reward;
mod sac;
mod train;

pub use episode::{
    run_episode, ControlMode, Episode, EpisodeEvent, StepInfo, EPISODE_PIPELINE_ID,
};
pub use observe::{decode_action, encode_observation, Observation, RlAction};
pub use replay::{Done, ReplayBuffer, Transition};
pub use reward::{compute_reward, ProgressFlags, ProgressTracker, RewardConfig};
pub use sac::{Sac, SacConfig, SacLosses};
pub use train::{train, train_from_state, CurvePoint, TrainConfig, TrainOutput, TrainState};


use crate::dwa::{DwaConfig, DwaError};
use crate::env::{EnvError, LaserRig, Route, VesselNetwork, WaypointSequence};
use crate::kinematics::{KinematicLimits, KinematicsError, RobotConfig};
use crate::learner::LearnError;
use crate::{Quat, Vec3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Dwa(#[from] DwaError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("action has {got} dimensions, expected {expected}")]
    ActionDim { expected: usize, got: usize },
    #[error("policy network expects observation dim {expected}, environment produces {got}")]
    ObsDim { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("no seen sequences available for training")]
    NoTrainingSequences,
}

/// Fully assembled world shared by training and evaluation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub net: VesselNetwork,
    pub sequences: Vec<(WaypointSequence, Route)>,
    pub rig: LaserRig,
    pub limits: KinematicLimits,
    pub robot: RobotConfig,
    pub dwa: DwaConfig,
    pub reward: RewardConfig,
    pub step_cap: usize,
    /// Cap on the observed-volume arclength window.
    pub window_cap: f64,
    pub start_position: Vec3,
    pub start_orientation: Quat,
}

/// Everything needed to assemble a [`Scenario`] besides the network.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub sequence_count: usize,
    /// Intermediate waypoints per sequence (the final target is extra).
    pub waypoints: usize,
    pub goal_radius: f64,
    pub sequence_seed: u64,
    /// Arclength along the trunk where the robot starts.
    pub start_s: f64,
    pub sensors: usize,
    pub max_range: f64,
    pub limits: KinematicLimits,
    pub robot: RobotConfig,
    pub dwa: DwaConfig,
    pub reward: RewardConfig,
    pub step_cap: usize,
    pub window_cap: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            sequence_count: 6,
            waypoints: 3,
            goal_radius: 0.3,
            sequence_seed: 0,
            start_s: 0.5,
            sensors: 50,
            max_range: 4.0,
            limits: KinematicLimits::default(),
            robot: RobotConfig::default(),
            dwa: DwaConfig::default(),
            reward: RewardConfig::default(),
            step_cap: 2_000,
            window_cap: 3.0,
        }
    }
}

impl Scenario {
    /// Builds routes, waypoint sequences and the start pose over a network.
    pub fn assemble(net: VesselNetwork, cfg: &ScenarioConfig) -> Result<Self, AgentError> {
        let sequences = crate::env::generate_sequences(
            &net,
            cfg.sequence_count,
            cfg.waypoints,
            cfg.goal_radius,
            cfg.sequence_seed,
            cfg.start_s,
        )?;
        let start_position = sequences[0].1.point_at(0.0);
        let tangent = net.segments()[0].tangent_at(cfg.start_s);
        let start_orientation =
            match crate::kinematics::alignment_rotation(&Quat::identity(), tangent) {
                Ok(dr) => Quat::from_rotation_matrix(&dr),
                Err(_) => Quat::identity(),
            };
        Ok(Self {
            net,
            sequences,
            rig: LaserRig::fibonacci(cfg.sensors, cfg.max_range),
            limits: cfg.limits.clone(),
            robot: cfg.robot,
            dwa: cfg.dwa.clone(),
            reward: cfg.reward.clone(),
            step_cap: cfg.step_cap,
            window_cap: cfg.window_cap,
            start_position,
            start_orientation,
        })
    }

    pub fn observation_dim(&self) -> usize {
        9 + self.rig.len()
    }

    /// Indices of the training-split sequences.
    pub fn seen_indices(&self) -> Vec<usize> {
        self.sequences
            .iter()
            .enumerate()
            .filter(|(_, (s, _))| s.label == crate::env::SequenceLabel::Seen)
            .map(|(i, _)| i)
            .collect()
    }
}
