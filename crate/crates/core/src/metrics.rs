//! Episode-level performance metrics and their aggregation.

use crate::env::{
    observed_segment_volume, CenterlineRef, EnvError, LaserRig, Route, VesselNetwork,
    WaypointSequence,
};
use crate::kinematics::{collision_check, RobotConfig, RobotState};
use crate::Vec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("curve steps must be strictly increasing (violation at index {0})")]
    UnsortedCurve(usize),
    #[error("empty input")]
    Empty,
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Final target reached.
    Goal,
    /// Robot center left the lumen.
    Outside,
    /// No forward progress for the configured number of consecutive steps.
    Stuck,
    /// Step cap hit.
    StepCap,
    /// A component error aborted the episode (e.g. degenerate scan cloud).
    Aborted,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Outcome::Goal => "goal",
            Outcome::Outside => "outside",
            Outcome::Stuck => "stuck",
            Outcome::StepCap => "step_cap",
            Outcome::Aborted => "aborted",
        };
        write!(f, "{s}")
    }
}

/// One executed control step of an episode log.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub state: RobotState,
    pub reward: f64,
    /// Occupied-volume percentage for this step (zero on collision).
    pub v_pct_step: f64,
}

/// Per-episode log plus final metrics.
#[derive(Debug, Clone)]
pub struct EpisodeReport {
    pub steps: Vec<StepRecord>,
    pub p_pct: f64,
    pub v_pct: f64,
    pub outcome: Outcome,
    pub total_reward: f64,
}

/// Percentage of the planned route arclength monotonically traversed.
///
/// Positions project onto the route with step-to-step continuity; the
/// metric is the running maximum of the projections. Reaching the final
/// target scores exactly 100.
pub fn path_completion(traj: &[Vec3], route: &Route, sequence: &WaypointSequence) -> f64 {
    assert!(!traj.is_empty(), "trajectory must be non-empty");
    let total = route.total_arclength();
    if total <= 0.0 {
        return 100.0;
    }
    if let Some(last) = traj.last() {
        if (last - sequence.final_target()).norm() <= sequence.goal_radius {
            return 100.0;
        }
    }
    let mut prev: Option<f64> = None;
    let mut best: f64 = 0.0;
    for p in traj {
        let s = route.project(*p, prev);
        prev = Some(s);
        best = best.max(s);
    }
    (100.0 * best / total).clamp(0.0, 100.0)
}

/// Occupied-volume percentage for one step: robot ellipsoid volume over
/// the observed lumen-segment volume, clamped to [0, 100], and zero when
/// the robot is in collision. Returns the centerline projection for the
/// caller to thread into the next step.
pub fn occupied_volume_step(
    state: &RobotState,
    net: &VesselNetwork,
    rig: &LaserRig,
    robot: &RobotConfig,
    prev: Option<CenterlineRef>,
    window_cap: f64,
) -> Result<(f64, CenterlineRef), EnvError> {
    let motion = if state.v.norm() > crate::V_EPS { state.v.normalize() } else { state.body_x() };
    let (segment_volume, proj) =
        observed_segment_volume(net, state.p, motion, rig, prev, window_cap)?;
    if collision_check(state, net, robot) {
        return Ok((0.0, proj));
    }
    let semi = robot.nominal_radius * state.delta;
    let robot_volume = 4.0 / 3.0 * std::f64::consts::PI * semi.x * semi.y * semi.z;
    let pct = if segment_volume > 0.0 { 100.0 * robot_volume / segment_volume } else { 100.0 };
    Ok((pct.clamp(0.0, 100.0), proj))
}

/// Order statistics of one group of episode reports.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Stats {
    pub median: f64,
    pub iqr: f64,
    pub mean: f64,
    pub std: f64,
}

/// Summary over a group of reports: one [`Stats`] per metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSummary {
    pub episodes: usize,
    pub p_pct: Stats,
    pub v_pct: Stats,
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn stats_of(values: &[f64]) -> Stats {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / sorted.len() as f64;
    Stats {
        median: quantile(&sorted, 0.5),
        iqr: quantile(&sorted, 0.75) - quantile(&sorted, 0.25),
        mean,
        std: var.sqrt(),
    }
}

/// Aggregates one group of reports (the caller owns the grouping keys).
pub fn aggregate(reports: &[EpisodeReport]) -> Result<MetricSummary, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    let p: Vec<f64> = reports.iter().map(|r| r.p_pct).collect();
    let v: Vec<f64> = reports.iter().map(|r| r.v_pct).collect();
    Ok(MetricSummary { episodes: reports.len(), p_pct: stats_of(&p), v_pct: stats_of(&v) })
}

/// Trapezoidal area under a `(step, value)` curve.
pub fn auc(curve: &[(f64, f64)]) -> Result<f64, MetricsError> {
    if curve.is_empty() {
        return Err(MetricsError::Empty);
    }
    for (i, w) in curve.windows(2).enumerate() {
        if w[1].0 <= w[0].0 {
            return Err(MetricsError::UnsortedCurve(i + 1));
        }
    }
    Ok(curve
        .windows(2)
        .map(|w| 0.5 * (w[1].1 + w[0].1) * (w[1].0 - w[0].0))
        .sum())
}
