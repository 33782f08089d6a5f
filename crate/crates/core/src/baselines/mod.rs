//! The two comparison controllers: a pure-RL agent that commands
//! velocities directly, and a model-based planner built on the Delaunay
//! triangulation of the sensed wall points and its Voronoi dual.

mod delaunay;
mod pure_rl;
mod voronoi;

pub use delaunay::{tetrahedralize, Delaunay};
pub use pure_rl::{decode_pure_action, PureRlAction, PURE_RL_ACTION_DIM};
pub use voronoi::{
    circumball_stats,
    build_voronoi_graph, model_based_step, run_model_based_episode, shortest_path, VoronoiGraph,
};

use crate::agent::AgentError;
use crate::env::EnvError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    /// The scan cloud cannot support a usable Voronoi graph. This is the
    /// expected failure mode at sparse sensing resolutions and scores the
    /// episode zero on all metrics.
    #[error("degenerate scan cloud: {0}")]
    DegenerateCloud(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}
