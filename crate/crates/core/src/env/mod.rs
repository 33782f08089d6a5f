//! Procedural tube-network environments.
//!
//! A [`VesselNetwork`] is a union of capsule chains swept along
//! Catmull-Rom centerlines. The union admits an analytic signed-distance
//! query, which backs laser raycasting, collision checks and the
//! observed-volume metric.

mod grid;
mod laser;
mod network;
mod route;
mod segment;
mod spline;
mod volume;

pub use laser::{inject_noise, scan, wall_hit_points, LaserRig};
pub use network::{generate_network, is_connected, Aabb, NetworkSpec, VesselNetwork};
pub use route::{build_route, generate_sequences, Route, SequenceLabel, WaypointSequence};
pub use segment::{CenterlineSample, CenterlineSegment};
pub use volume::{observed_segment_volume, project_onto_centerline, CenterlineRef};

use thiserror::Error;

/// Errors raised by environment construction and queries.
#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("generated tube network self-intersects (curvature too high for the radius range)")]
    SelfIntersecting,
    #[error("invalid centerline segment: {0}")]
    InvalidSegment(String),
    #[error("raycast origin lies outside the lumen (signed distance {0} >= 0)")]
    OriginOutsideLumen(f64),
    #[error("ray direction is not unit norm (|dir| = {0})")]
    NonUnitDirection(f64),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("centerline projection is ambiguous and no previous reference is available")]
    AmbiguousProjection,
    #[error("waypoint {0} lies outside the lumen")]
    WaypointOutsideLumen(usize),
    #[error("invalid waypoint sequence: {0}")]
    InvalidSequence(String),
}
