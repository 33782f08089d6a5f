//! Episode stepping: one shared pipeline drives the hybrid controller,
//! the pure-RL baseline and the model-based baseline, so every method
//! sees identical kinematics, reward and termination code.

use super::observe::{decode_action, encode_observation, Observation, RL_ACTION_DIM};
use super::replay::{Done, Transition};
use super::reward::{compute_reward, ProgressTracker};
use super::{AgentError, Scenario};
use crate::dwa::{dynamic_window, select_velocity, wall_from_cloud, DwaResult};
use crate::env::{inject_noise, scan, CenterlineRef};
use crate::kinematics::{
    alignment_rotation, collision_check, integrate_orientation_exact,
    integrate_translation_deformation, is_outside, RobotState,
};
use crate::learner::{squash_mean, Mlp};
use crate::metrics::{occupied_volume_step, EpisodeReport, Outcome, StepRecord};
use crate::{Vec3, V_EPS};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identity of the shared stepping code path, recorded in run manifests
/// so cross-method comparisons can assert they executed the same pipeline.
pub const EPISODE_PIPELINE_ID: &str = concat!(module_path!(), "::Episode::advance");

/// Which controller feeds the shared pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// Policy outputs DWA weights plus roll and deformation rates; the
    /// window search picks the linear velocity.
    RlDwa,
    /// Policy outputs the linear velocity directly (clipped into the
    /// dynamic window) plus roll and deformation rates.
    PureRl,
}

impl ControlMode {
    pub fn action_dim(self) -> usize {
        match self {
            ControlMode::RlDwa => RL_ACTION_DIM,
            ControlMode::PureRl => 7,
        }
    }
}

/// Notable events of one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EpisodeEvent {
    WaypointReached(usize),
    GoalReached,
    ExitedLumen,
    Collided,
    StuckPenalty,
}

/// Learning-facing result of one step.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub transition: Transition,
    pub events: Vec<EpisodeEvent>,
    pub dwa: Option<DwaResult>,
    pub done: bool,
}

struct Advance {
    reward: f64,
    events: Vec<EpisodeEvent>,
    done: Option<Done>,
}

/// One running episode over a borrowed scenario.
pub struct Episode<'a> {
    scenario: &'a Scenario,
    seq_idx: usize,
    mode: ControlMode,
    noise_sigma: f64,
    state: RobotState,
    waypoint_idx: usize,
    tracker: ProgressTracker,
    rng: ChaCha8Rng,
    steps: usize,
    outcome: Option<Outcome>,
    pending_scan: Option<Vec<f64>>,
    center_ref: Option<CenterlineRef>,
    positions: Vec<Vec3>,
    total_reward: f64,
}

impl<'a> Episode<'a> {
    pub fn new(
        scenario: &'a Scenario,
        seq_idx: usize,
        mode: ControlMode,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        let state = RobotState::at_rest(scenario.start_position, scenario.start_orientation);
        let (_, route) = &scenario.sequences[seq_idx];
        let start_s = route.project(state.p, None);
        Self {
            scenario,
            seq_idx,
            mode,
            noise_sigma,
            state,
            waypoint_idx: 0,
            tracker: ProgressTracker::new(start_s, scenario.reward.stuck_window),
            rng: ChaCha8Rng::seed_from_u64(seed),
            steps: 0,
            outcome: None,
            pending_scan: None,
            center_ref: None,
            positions: vec![state.p],
            total_reward: 0.0,
        }
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn done(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }

    pub fn current_waypoint(&self) -> Vec3 {
        let (seq, _) = &self.scenario.sequences[self.seq_idx];
        seq.waypoints[self.waypoint_idx.min(seq.waypoints.len() - 1)]
    }

    fn ensure_scan(&mut self) -> Result<(), AgentError> {
        if self.pending_scan.is_none() {
            let clean = scan(&self.scenario.net, self.state.p, self.state.q, &self.scenario.rig)?;
            let noisy = if self.noise_sigma > 0.0 {
                inject_noise(&clean, self.noise_sigma, self.rng.gen(), self.scenario.rig.max_range())
            } else {
                clean
            };
            self.pending_scan = Some(noisy);
        }
        Ok(())
    }

    /// Scan readings the upcoming step will act on.
    pub fn sensed_scan(&mut self) -> Result<&[f64], AgentError> {
        self.ensure_scan()?;
        Ok(self.pending_scan.as_deref().unwrap())
    }

    /// Observation for the upcoming step.
    pub fn observe(&mut self) -> Result<Observation, AgentError> {
        if self.done() {
            return Err(AgentError::EpisodeFinished);
        }
        self.ensure_scan()?;
        encode_observation(
            &self.state,
            self.pending_scan.as_deref().unwrap(),
            self.scenario.rig.max_range(),
            self.current_waypoint(),
        )
    }

    /// World-frame wall-hit points of the sensed scan (readings at max
    /// range are free space, not obstacles).
    fn hit_cloud(&self, readings: &[f64]) -> Vec<Vec3> {
        crate::env::wall_hit_points(self.state.p, self.state.q, &self.scenario.rig, readings)
    }

    /// Steps with a raw policy action of the mode's dimension.
    pub fn step(&mut self, raw: &[f64]) -> Result<StepInfo, AgentError> {
        if self.done() {
            return Err(AgentError::EpisodeFinished);
        }
        if raw.len() != self.mode.action_dim() {
            return Err(AgentError::ActionDim { expected: self.mode.action_dim(), got: raw.len() });
        }
        self.ensure_scan()?;
        let readings = self.pending_scan.clone().unwrap();
        let obs = encode_observation(
            &self.state,
            &readings,
            self.scenario.rig.max_range(),
            self.current_waypoint(),
        )?;

        let limits = &self.scenario.limits;
        let (v_exec, omega_x, delta_rate, dwa_result) = match self.mode {
            ControlMode::RlDwa => {
                let action = decode_action(raw, limits)?;
                let cloud = self.hit_cloud(&readings);
                let wall = wall_from_cloud(&cloud);
                let result = select_velocity(
                    self.state.p,
                    self.state.v,
                    &action.weights,
                    self.current_waypoint(),
                    &wall,
                    limits,
                    &self.scenario.dwa,
                )?;
                let v = result.v_star_vec();
                debug_assert!(dynamic_window(self.state.v, limits).contains(v, 1e-9));
                (v, action.omega_x, action.delta_rate, Some(result))
            }
            ControlMode::PureRl => {
                let action = crate::baselines::decode_pure_action(raw, limits)?;
                let v = dynamic_window(self.state.v, limits).clip(action.v);
                (v, action.omega_x, action.delta_rate, None)
            }
        };

        let adv = self.advance(v_exec, omega_x, delta_rate)?;

        let next_obs = if self.outcome == Some(Outcome::Outside) {
            // no scan is defined outside the lumen
            vec![0.0; self.scenario.observation_dim()]
        } else {
            self.ensure_scan()?;
            encode_observation(
                &self.state,
                self.pending_scan.as_deref().unwrap(),
                self.scenario.rig.max_range(),
                self.current_waypoint(),
            )?
            .to_vec()
        };

        let done_flag = adv.done.unwrap_or(Done::Not);
        Ok(StepInfo {
            transition: Transition {
                obs: obs.to_vec(),
                action: raw.to_vec(),
                reward: adv.reward,
                next_obs,
                done: done_flag,
            },
            events: adv.events,
            dwa: dwa_result,
            done: done_flag.is_episode_end(),
        })
    }

    /// Steps with an explicit velocity command (model-based baseline).
    /// The command is scaled into the dynamic window so all controllers
    /// share actuation limits.
    pub fn step_direct(
        &mut self,
        v_desired: Vec3,
        omega_x: f64,
        delta_rate: Vec3,
    ) -> Result<(f64, Vec<EpisodeEvent>), AgentError> {
        if self.done() {
            return Err(AgentError::EpisodeFinished);
        }
        self.ensure_scan()?;
        let limits = &self.scenario.limits;
        let v = scale_into_window(self.state.v, v_desired, limits);
        let delta_rate = Vec3::new(
            delta_rate.x.clamp(-limits.delta_rate_max[0], limits.delta_rate_max[0]),
            delta_rate.y.clamp(-limits.delta_rate_max[1], limits.delta_rate_max[1]),
            delta_rate.z.clamp(-limits.delta_rate_max[2], limits.delta_rate_max[2]),
        );
        let omega_x = omega_x.clamp(-limits.omega_x_max, limits.omega_x_max);
        let adv = self.advance(v, omega_x, delta_rate)?;
        Ok((adv.reward, adv.events))
    }

    /// The shared physical step: integrate, align, check, reward, advance
    /// waypoints, decide termination.
    fn advance(&mut self, v: Vec3, omega_x: f64, delta_rate: Vec3) -> Result<Advance, AgentError> {
        let scenario = self.scenario;
        let mut next = integrate_translation_deformation(
            &self.state,
            v,
            delta_rate,
            &scenario.limits,
            &scenario.robot,
        )?;
        if v.norm() > V_EPS {
            let delta_r = alignment_rotation(&self.state.q, v)?;
            next.q = integrate_orientation_exact(&self.state.q, &delta_r, omega_x, scenario.limits.dt);
        } else {
            next.q = integrate_orientation_exact(
                &self.state.q,
                &nalgebra::Rotation3::identity(),
                omega_x,
                scenario.limits.dt,
            );
        }
        next.omega_x = omega_x;

        let collided = collision_check(&next, &scenario.net, &scenario.robot);
        let outside = is_outside(&next, &scenario.net);

        let (seq, route) = &scenario.sequences[self.seq_idx];
        let s_new = route.project(next.p, Some(self.tracker.route_s()));
        let flags = self.tracker.observe(s_new, scenario.reward.stuck_progress_eps);

        let mut events = Vec::new();
        if collided {
            events.push(EpisodeEvent::Collided);
        }
        while self.waypoint_idx < seq.waypoints.len()
            && (next.p - seq.waypoints[self.waypoint_idx]).norm() <= seq.goal_radius
        {
            events.push(EpisodeEvent::WaypointReached(self.waypoint_idx));
            self.waypoint_idx += 1;
        }
        let goal_reached = self.waypoint_idx == seq.waypoints.len();
        if goal_reached {
            events.push(EpisodeEvent::GoalReached);
        }
        if outside {
            events.push(EpisodeEvent::ExitedLumen);
        }
        let stuck = flags.backward || flags.window_stalled;
        if stuck {
            events.push(EpisodeEvent::StuckPenalty);
        }

        let reward =
            compute_reward(next.delta, collided, stuck, outside, goal_reached, &scenario.reward);

        self.state = next;
        self.positions.push(next.p);
        self.steps += 1;
        self.pending_scan = None;
        self.total_reward += reward;

        let done = if goal_reached {
            self.outcome = Some(Outcome::Goal);
            Some(Done::Terminal)
        } else if outside {
            self.outcome = Some(Outcome::Outside);
            Some(Done::Terminal)
        } else if flags.no_progress_streak >= scenario.reward.no_progress_limit {
            self.outcome = Some(Outcome::Stuck);
            Some(Done::Terminal)
        } else if self.steps >= scenario.step_cap {
            self.outcome = Some(Outcome::StepCap);
            Some(Done::Truncated)
        } else {
            None
        };
        Ok(Advance { reward, events, done })
    }

    /// Occupied-volume percentage of the current state, with the
    /// projection continuity threaded across calls.
    pub fn occupied_volume(&mut self) -> Result<f64, AgentError> {
        let (pct, proj) = occupied_volume_step(
            &self.state,
            &self.scenario.net,
            &self.scenario.rig,
            &self.scenario.robot,
            self.center_ref,
            self.scenario.window_cap,
        )?;
        self.center_ref = Some(proj);
        Ok(pct)
    }
}

/// Largest multiple of `v_desired`'s direction that stays inside the
/// dynamic window (axis-preserving, unlike per-axis clamping).
fn scale_into_window(
    v_t: Vec3,
    v_desired: Vec3,
    limits: &crate::kinematics::KinematicLimits,
) -> Vec3 {
    let window = dynamic_window(v_t, limits);
    if v_desired.norm() <= V_EPS {
        return window.clip(Vec3::zeros());
    }
    let mut scale = f64::INFINITY;
    for i in 0..3 {
        let d = v_desired[i];
        if d.abs() < 1e-12 {
            continue;
        }
        let bound = if d > 0.0 { window.hi[i] / d } else { window.lo[i] / d };
        scale = scale.min(bound.max(0.0));
    }
    if !scale.is_finite() {
        scale = 0.0;
    }
    window.clip(v_desired * scale.min(1.0e9))
}

/// Deterministic evaluation rollout with the policy mean action.
///
/// The policy network maps observations to `[means, log_stds]`; only the
/// squashed means are used here.
pub fn run_episode(
    scenario: &Scenario,
    seq_idx: usize,
    mode: ControlMode,
    policy: &Mlp,
    noise_sigma: f64,
    seed: u64,
) -> Result<EpisodeReport, AgentError> {
    let obs_dim = scenario.observation_dim();
    if policy.input_dim() != obs_dim {
        return Err(AgentError::ObsDim { expected: policy.input_dim(), got: obs_dim });
    }
    let action_dim = mode.action_dim();
    if policy.output_dim() != 2 * action_dim {
        return Err(AgentError::ActionDim {
            expected: 2 * action_dim,
            got: policy.output_dim(),
        });
    }
    let mut ep = Episode::new(scenario, seq_idx, mode, noise_sigma, seed);
    let mut steps: Vec<StepRecord> = Vec::new();
    while !ep.done() {
        let obs = ep.observe()?;
        let out = policy.forward(&obs.to_vec())?;
        let raw = squash_mean(&out[..action_dim]);
        let info = ep.step(&raw)?;
        let v_pct_step = if ep.outcome() == Some(Outcome::Outside) {
            0.0
        } else {
            ep.occupied_volume()?
        };
        steps.push(StepRecord { state: *ep.state(), reward: info.transition.reward, v_pct_step });
    }
    let (seq, route) = &scenario.sequences[seq_idx];
    let p_pct = crate::metrics::path_completion(ep.positions(), route, seq);
    let v_pct = if steps.is_empty() {
        0.0
    } else {
        steps.iter().map(|s| s.v_pct_step).sum::<f64>() / steps.len() as f64
    };
    Ok(EpisodeReport {
        p_pct,
        v_pct,
        outcome: ep.outcome().unwrap(),
        total_reward: ep.total_reward(),
        steps,
    })
}
