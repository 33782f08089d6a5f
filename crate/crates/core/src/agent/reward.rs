//! The dense step reward and progress bookkeeping behind its penalties.

use crate::Vec3;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Reward constants and the progress-rule parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub r_stuck: f64,
    pub r_outside: f64,
    pub r_goal: f64,
    /// Steps over which the stuck penalty inspects progress.
    pub stuck_window: usize,
    /// Minimum route-arclength progress over the window to avoid the
    /// stuck penalty.
    pub stuck_progress_eps: f64,
    /// Consecutive non-progressing steps that terminate the episode.
    pub no_progress_limit: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            r_stuck: -1.0,
            r_outside: -50.0,
            r_goal: 100.0,
            stuck_window: 20,
            stuck_progress_eps: 0.05,
            no_progress_limit: 50,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.r_stuck > 0.0 || self.r_outside > 0.0 || self.r_goal < 0.0 {
            return Err("penalties must be <= 0 and the goal bonus >= 0".into());
        }
        if self.stuck_window == 0 || self.no_progress_limit == 0 {
            return Err("stuck_window and no_progress_limit must be positive".into());
        }
        Ok(())
    }
}

/// Per-step progress verdicts derived from the route projection.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProgressFlags {
    /// The step moved backward along the centerline.
    pub backward: bool,
    /// Progress over the last `stuck_window` steps fell below the epsilon.
    pub window_stalled: bool,
    /// Consecutive steps without forward progress, for the termination rule.
    pub no_progress_streak: usize,
}

/// Tracks route-arclength progress across an episode.
#[derive(Debug, Clone)]
pub struct ProgressTracker {
    history: VecDeque<f64>,
    window: usize,
    current: f64,
    best: f64,
    streak: usize,
}

/// A step counts as progressing when the projection advances by more than
/// this tolerance (jitter at rest must not count as progress).
const PROGRESS_TOL: f64 = 1e-9;

impl ProgressTracker {
    pub fn new(start_s: f64, window: usize) -> Self {
        let mut history = VecDeque::with_capacity(window + 1);
        history.push_back(start_s);
        Self { history, window, current: start_s, best: start_s, streak: 0 }
    }

    pub fn route_s(&self) -> f64 {
        self.current
    }

    pub fn best_s(&self) -> f64 {
        self.best
    }

    /// Records the new projection and reports the progress verdicts.
    pub fn observe(&mut self, s_new: f64, progress_eps: f64) -> ProgressFlags {
        let backward = s_new < self.current - PROGRESS_TOL;
        let progressed = s_new > self.current + PROGRESS_TOL;
        self.streak = if progressed { 0 } else { self.streak + 1 };
        self.current = s_new;
        self.best = self.best.max(s_new);
        self.history.push_back(s_new);
        let window_stalled = if self.history.len() > self.window {
            while self.history.len() > self.window + 1 {
                self.history.pop_front();
            }
            let oldest = *self.history.front().unwrap();
            s_new - oldest < progress_eps
        } else {
            false
        };
        ProgressFlags { backward, window_stalled, no_progress_streak: self.streak }
    }
}

/// Step reward: deformation term (geometric mean of the deformation
/// triple, zeroed in collision) plus the stuck, outside and goal
/// constants when their conditions fire.
pub fn compute_reward(
    delta: Vec3,
    collided: bool,
    stuck: bool,
    outside: bool,
    goal_reached: bool,
    cfg: &RewardConfig,
) -> f64 {
    let r_def = if collided { 0.0 } else { (delta.x * delta.y * delta.z).cbrt() };
    let r_stuck = if stuck { cfg.r_stuck } else { 0.0 };
    let r_outside = if outside { cfg.r_outside } else { 0.0 };
    let r_goal = if goal_reached { cfg.r_goal } else { 0.0 };
    r_def + r_stuck + r_outside + r_goal
}
