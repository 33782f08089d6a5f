//! `lumenav plan-once`: run a single window search on a described scene
//! and print the result as JSON.

use anyhow::{Context, Result};
use lumenav_core::dwa::{
    select_velocity, wall_from_cloud, wall_from_net, DwaConfig, DwaWeights,
};
use lumenav_core::env::{generate_network, NetworkSpec};
use lumenav_core::kinematics::KinematicLimits;
use lumenav_core::Vec3;
use serde::Deserialize;
use std::path::Path;

/// Scene description for a one-shot planner query.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub env: NetworkSpec,
    pub query: QueryFile,
    pub weights: WeightsFile,
    #[serde(default)]
    pub limits: KinematicLimits,
    #[serde(default)]
    pub dwa: DwaConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFile {
    pub position: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    pub goal: [f64; 3],
    /// "sdf" plans against the true wall distance; "scan" uses the
    /// sensed hit cloud of an N-beam rig at the query pose.
    #[serde(default = "default_clearance")]
    pub clearance: String,
    #[serde(default = "default_sensors")]
    pub sensors: usize,
}

fn default_clearance() -> String {
    "scan".into()
}

fn default_sensors() -> usize {
    50
}

#[derive(Debug, Deserialize)]
pub struct WeightsFile {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub zeta: f64,
}

pub fn run(scene_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(scene_path)
        .with_context(|| format!("reading scene {}", scene_path.display()))?;
    let scene: SceneFile = toml::from_str(&text)
        .map_err(|e| super::UsageError(format!("parsing scene: {e}")))?;
    let net = generate_network(scene.env.seed, &scene.env)
        .map_err(|e| super::UsageError(format!("generating network: {e}")))?;
    let weights =
        DwaWeights::new(scene.weights.alpha, scene.weights.beta, scene.weights.gamma, scene.weights.zeta);
    let p = Vec3::from(scene.query.position);
    let v = Vec3::from(scene.query.velocity);
    let goal = Vec3::from(scene.query.goal);

    let result = match scene.query.clearance.as_str() {
        "sdf" => {
            let wall = wall_from_net(&net);
            select_velocity(p, v, &weights, goal, &wall, &scene.limits, &scene.dwa)
        }
        "scan" => {
            let rig = lumenav_core::env::LaserRig::fibonacci(scene.query.sensors, 4.0);
            let readings = lumenav_core::env::scan(&net, p, lumenav_core::Quat::identity(), &rig)
                .map_err(|e| anyhow::anyhow!("scanning: {e}"))?;
            let cloud =
                lumenav_core::env::wall_hit_points(p, lumenav_core::Quat::identity(), &rig, &readings);
            let wall = wall_from_cloud(&cloud);
            select_velocity(p, v, &weights, goal, &wall, &scene.limits, &scene.dwa)
        }
        other => {
            return Err(super::UsageError(format!(
                "unknown clearance source {other:?} (use \"sdf\" or \"scan\")"
            ))
            .into())
        }
    }
    .map_err(|e| anyhow::anyhow!("planning: {e}"))?;

    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(())
}
