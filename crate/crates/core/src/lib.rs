//! Simulator, planner and learning stack for goal-directed 3D local
//! navigation of a deformable 9-DoF ellipsoidal robot inside procedural
//! tube networks.
//!
//! The crate is organised around the control loop: [`env`] provides the
//! tube-network world (signed distances, laser scans, waypoint routes),
//! [`kinematics`] integrates the robot state, [`dwa`] selects linear
//! velocities on a sampled dynamic window, [`learner`] holds the small
//! neural-network stack, [`agent`] wires everything into an MDP trained
//! with soft actor-critic, [`baselines`] hosts the two comparison
//! controllers, and [`metrics`] computes the episode-level scores.

pub mod agent;
pub mod baselines;
pub mod dwa;
pub mod env;
pub mod kinematics;
pub mod learner;
pub mod metrics;

pub use agent::{Observation, RewardConfig, RlAction, Scenario, ScenarioConfig, Transition};
pub use dwa::{DwaConfig, DwaResult, DwaWeights};
pub use env::{CenterlineSegment, LaserRig, NetworkSpec, VesselNetwork, WaypointSequence};
pub use kinematics::{KinematicLimits, RobotConfig, RobotState};
pub use metrics::EpisodeReport;

/// 3-vector in world units.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Unit quaternion orientation (x, y, z, w component order in logs).
pub type Quat = nalgebra::UnitQuaternion<f64>;

/// Speed below which direction-dependent quantities are considered undefined.
pub const V_EPS: f64 = 1e-6;
