//! 3D dynamic-window velocity optimizer.
//!
//! Builds the admissible velocity box from acceleration limits, rolls out
//! constant-velocity trajectories over a fixed horizon, scores them with
//! four normalized terms and returns the lattice maximizer with a
//! deterministic tie-break.

use crate::kinematics::KinematicLimits;
use crate::{Vec3, V_EPS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DwaError {
    #[error("dynamic window is empty on axis {0}")]
    EmptyWindow(usize),
}

/// The four cost weights, each clamped to [0, 1] at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwaWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub zeta: f64,
}

impl DwaWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64, zeta: f64) -> Self {
        let c = |w: f64| w.clamp(0.0, 1.0);
        Self { alpha: c(alpha), beta: c(beta), gamma: c(gamma), zeta: c(zeta) }
    }
}

/// Sampling lattice and rollout horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DwaConfig {
    /// Samples per velocity axis; the candidate budget is this cubed.
    pub samples_per_axis: usize,
    /// Rollout horizon in seconds.
    pub horizon: f64,
    /// Rollout discretization step.
    pub dt: f64,
    /// Wall distance at which the clearance term saturates to 1.
    pub clear_saturation: f64,
}

impl Default for DwaConfig {
    fn default() -> Self {
        Self { samples_per_axis: 5, horizon: 0.5, dt: 0.1, clear_saturation: 0.5 }
    }
}

impl DwaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.samples_per_axis < 2 {
            return Err("samples_per_axis must be >= 2".into());
        }
        if !(self.horizon >= self.dt && self.dt > 0.0) {
            return Err("horizon must be >= dt > 0".into());
        }
        if !(self.clear_saturation > 0.0) {
            return Err("clear_saturation must be > 0".into());
        }
        Ok(())
    }

    /// Number of rollout points over the horizon.
    pub fn rollout_points(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }
}

/// Axis-aligned admissible velocity box.
#[derive(Debug, Clone, Copy)]
pub struct VelocityWindow {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl VelocityWindow {
    pub fn contains(&self, v: Vec3, tol: f64) -> bool {
        (0..3).all(|i| v[i] >= self.lo[i] - tol && v[i] <= self.hi[i] + tol)
    }

    pub fn clip(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            v.x.clamp(self.lo.x, self.hi.x),
            v.y.clamp(self.lo.y, self.hi.y),
            v.z.clamp(self.lo.z, self.hi.z),
        )
    }
}

/// Per-term scores of a candidate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TermValues {
    pub vel: f64,
    pub dir: f64,
    pub clear: f64,
    pub head: f64,
}

/// Winning candidate of a window search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DwaResult {
    pub v_star: [f64; 3],
    pub score: f64,
    pub per_term: TermValues,
    pub candidates_evaluated: usize,
}

impl DwaResult {
    pub fn v_star_vec(&self) -> Vec3 {
        Vec3::from(self.v_star)
    }
}

/// Velocities reachable within one control interval, intersected with the
/// global speed bound.
pub fn dynamic_window(v_t: Vec3, limits: &KinematicLimits) -> VelocityWindow {
    let a = limits.a_max_vec() * limits.dt;
    let vmax = limits.v_max_vec();
    VelocityWindow {
        lo: Vec3::new(
            (v_t.x - a.x).max(-vmax.x),
            (v_t.y - a.y).max(-vmax.y),
            (v_t.z - a.z).max(-vmax.z),
        ),
        hi: Vec3::new(
            (v_t.x + a.x).min(vmax.x),
            (v_t.y + a.y).min(vmax.y),
            (v_t.z + a.z).min(vmax.z),
        ),
    }
}

/// Straight-line constant-velocity prediction: `p + v*i*dt` for `i = 1..=P`.
pub fn rollout(p: Vec3, v: Vec3, config: &DwaConfig) -> Vec<Vec3> {
    (1..=config.rollout_points()).map(|i| p + v * (i as f64 * config.dt)).collect()
}

/// Speed term: `|v| / |v_max|`, clamped to [0, 1].
pub fn term_vel(v: Vec3, limits: &KinematicLimits) -> f64 {
    (v.norm() / limits.v_max_vec().norm()).clamp(0.0, 1.0)
}

/// Direction-continuity term: `(1 + cos(angle(v, v_t))) / 2`, defined as 1
/// when either velocity is at rest.
pub fn term_dir(v: Vec3, v_t: Vec3) -> f64 {
    let n1 = v.norm();
    let n2 = v_t.norm();
    if n1 <= V_EPS || n2 <= V_EPS {
        return 1.0;
    }
    (1.0 + v.dot(&v_t) / (n1 * n2)) / 2.0
}

/// Clearance term: minimum wall distance along the rollout, normalized by
/// the saturation distance. `wall_distance` reports distance-to-wall at a
/// point; a point outside the lumen must report 0.
pub fn term_clear<F: Fn(Vec3) -> f64>(
    p: Vec3,
    v: Vec3,
    wall_distance: &F,
    config: &DwaConfig,
) -> f64 {
    let mut min_dist = f64::INFINITY;
    for point in rollout(p, v, config) {
        let d = wall_distance(point);
        if d < min_dist {
            min_dist = d;
        }
    }
    (min_dist / config.clear_saturation).clamp(0.0, 1.0)
}

/// Goal-heading term: `(1 + cos(angle(v, goal_dir))) / 2`, 0.5 at rest.
pub fn term_head(v: Vec3, goal_dir: Vec3) -> f64 {
    let n = v.norm();
    if n <= V_EPS || goal_dir.norm() <= V_EPS {
        return 0.5;
    }
    (1.0 + v.dot(&goal_dir) / n) / 2.0
}

/// Wall-distance function backed by the true signed distance field.
pub fn wall_from_net(net: &crate::env::VesselNetwork) -> impl Fn(Vec3) -> f64 + '_ {
    move |p| (-net.signed_distance(p)).max(0.0)
}

/// Wall-distance estimate from a sensed obstacle point cloud: distance to
/// the nearest hit point, saturating when nothing was sensed. This is the
/// planner's production clearance source and is linear in the number of
/// sensed points.
pub fn wall_from_cloud(points: &[Vec3]) -> impl Fn(Vec3) -> f64 + '_ {
    move |p| {
        let mut best = f64::INFINITY;
        for q in points {
            let d = (p - q).norm();
            if d < best {
                best = d;
            }
        }
        best
    }
}

/// Exhaustive search over the `M^3` velocity lattice spanning the dynamic
/// window. Ties break toward higher clearance, then higher heading, then
/// the lowest lattice index.
pub fn select_velocity<F: Fn(Vec3) -> f64>(
    p: Vec3,
    v_t: Vec3,
    weights: &DwaWeights,
    goal: Vec3,
    wall_distance: &F,
    limits: &KinematicLimits,
    config: &DwaConfig,
) -> Result<DwaResult, DwaError> {
    let window = dynamic_window(v_t, limits);
    for i in 0..3 {
        if window.lo[i] > window.hi[i] {
            return Err(DwaError::EmptyWindow(i));
        }
    }
    let m = config.samples_per_axis;
    let axis = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (m - 1) as f64;
    let goal_delta = goal - p;
    let goal_dir =
        if goal_delta.norm() > V_EPS { goal_delta.normalize() } else { Vec3::zeros() };

    let mut best: Option<(f64, TermValues, Vec3)> = None;
    for ix in 0..m {
        let vx = axis(window.lo.x, window.hi.x, ix);
        for iy in 0..m {
            let vy = axis(window.lo.y, window.hi.y, iy);
            for iz in 0..m {
                let vz = axis(window.lo.z, window.hi.z, iz);
                let v = Vec3::new(vx, vy, vz);
                let terms = TermValues {
                    vel: term_vel(v, limits),
                    dir: term_dir(v, v_t),
                    clear: term_clear(p, v, wall_distance, config),
                    head: term_head(v, goal_dir),
                };
                let score = weights.alpha * terms.vel
                    + weights.beta * terms.dir
                    + weights.gamma * terms.clear
                    + weights.zeta * terms.head;
                let better = match &best {
                    None => true,
                    Some((bs, bt, _)) => {
                        score > *bs
                            || (score == *bs
                                && (terms.clear > bt.clear
                                    || (terms.clear == bt.clear && terms.head > bt.head)))
                    }
                };
                if better {
                    best = Some((score, terms, v));
                }
            }
        }
    }
    let (score, per_term, v_star) = best.expect("lattice is non-empty");
    Ok(DwaResult {
        v_star: [v_star.x, v_star.y, v_star.z],
        score,
        per_term,
        candidates_evaluated: m * m * m,
    })
}
