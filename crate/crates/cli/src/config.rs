//! Experiment configuration: one TOML file drives every subcommand.

use anyhow::{bail, Context, Result};
use lumenav_core::agent::{RewardConfig, SacConfig, Scenario, ScenarioConfig};
use lumenav_core::dwa::DwaConfig;
use lumenav_core::env::{generate_network, NetworkSpec};
use lumenav_core::kinematics::{KinematicLimits, RobotConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Which controller an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "rl-dwa")]
    RlDwa,
    #[serde(rename = "rl")]
    Rl,
    #[serde(rename = "model-based")]
    ModelBased,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::RlDwa => "rl-dwa",
            Method::Rl => "rl",
            Method::ModelBased => "model-based",
        }
    }
}

/// Run-level settings: method, sensing resolution, trial fan-out.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    /// Sensing resolution N.
    pub n: usize,
    /// Trials per waypoint sequence during evaluation.
    pub trials: usize,
    /// Seeds: training repetitions and the evaluation seed base.
    pub seeds: Vec<u64>,
    /// Noise levels as fractions of the calibrated mean scan distance.
    pub noise_levels: Vec<f64>,
    /// Training steps per session.
    pub total_steps: usize,
    pub output_dir: PathBuf,
    /// Steps between training snapshots.
    pub snapshot_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::RlDwa,
            n: 50,
            trials: 20,
            seeds: vec![0],
            noise_levels: vec![0.05, 0.10, 0.20],
            total_steps: 100_000,
            output_dir: PathBuf::from("runs/out"),
            snapshot_every: 10_000,
        }
    }
}

/// Scenario-level settings that are not part of a core config struct.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub sequence_count: usize,
    pub waypoints: usize,
    pub goal_radius: f64,
    pub sequence_seed: u64,
    pub start_s: f64,
    pub max_range: f64,
    pub step_cap: usize,
    pub window_cap: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let d = ScenarioConfig::default();
        Self {
            sequence_count: d.sequence_count,
            waypoints: d.waypoints,
            goal_radius: d.goal_radius,
            sequence_seed: d.sequence_seed,
            start_s: d.start_s,
            max_range: d.max_range,
            step_cap: d.step_cap,
            window_cap: d.window_cap,
        }
    }
}

/// The complete experiment description, echoed verbatim into manifests.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: NetworkSpec,
    pub world: WorldConfig,
    pub limits: KinematicLimits,
    pub robot: RobotConfig,
    pub dwa: DwaConfig,
    pub reward: RewardConfig,
    pub sac: SacConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate().map_err(|e| anyhow::anyhow!("env: {e}"))?;
        self.limits.validate().map_err(|e| anyhow::anyhow!("limits: {e}"))?;
        self.dwa.validate().map_err(|e| anyhow::anyhow!("dwa: {e}"))?;
        self.reward.validate().map_err(|e| anyhow::anyhow!("reward: {e}"))?;
        if self.run.n == 0 {
            bail!("run.n must be positive");
        }
        if self.run.trials == 0 {
            bail!("run.trials must be positive");
        }
        if self.run.seeds.is_empty() {
            bail!("run.seeds must hold at least one seed");
        }
        if self.world.sequence_count == 0 {
            bail!("world.sequence_count must be positive");
        }
        Ok(())
    }

    pub fn scenario_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            sequence_count: self.world.sequence_count,
            waypoints: self.world.waypoints,
            goal_radius: self.world.goal_radius,
            sequence_seed: self.world.sequence_seed,
            start_s: self.world.start_s,
            sensors: self.run.n,
            max_range: self.world.max_range,
            limits: self.limits.clone(),
            robot: self.robot,
            dwa: self.dwa.clone(),
            reward: self.reward.clone(),
            step_cap: self.world.step_cap,
            window_cap: self.world.window_cap,
        }
    }

    /// Builds the scenario at the configured sensing resolution.
    pub fn build_scenario(&self) -> Result<Scenario> {
        self.build_scenario_with_n(self.run.n)
    }

    pub fn build_scenario_with_n(&self, n: usize) -> Result<Scenario> {
        let net = generate_network(self.env.seed, &self.env)
            .map_err(|e| anyhow::anyhow!("generating network: {e}"))?;
        let mut sc = self.scenario_config();
        sc.sensors = n;
        Scenario::assemble(net, &sc).map_err(|e| anyhow::anyhow!("assembling scenario: {e}"))
    }
}
