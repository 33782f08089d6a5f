//! Waypoint sequences and the centerline routes they span.

use super::network::VesselNetwork;
use super::EnvError;
use crate::Vec3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Whether a sequence belongs to the training split or the held-out one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum SequenceLabel {
    Seen,
    Unseen,
}

impl std::fmt::Display for SequenceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SequenceLabel::Seen => write!(f, "seen"),
            SequenceLabel::Unseen => write!(f, "unseen"),
        }
    }
}

/// Ordered sparse goals: `w` intermediate waypoints plus the final target.
#[derive(Debug, Clone)]
pub struct WaypointSequence {
    pub waypoints: Vec<Vec3>,
    pub goal_radius: f64,
    pub label: SequenceLabel,
}

impl WaypointSequence {
    /// Validates waypoint count and strict lumen membership.
    pub fn new(
        waypoints: Vec<Vec3>,
        goal_radius: f64,
        label: SequenceLabel,
        net: &VesselNetwork,
        intermediate: usize,
    ) -> Result<Self, EnvError> {
        if waypoints.len() != intermediate + 1 {
            return Err(EnvError::InvalidSequence(format!(
                "expected {} waypoints ({} intermediate + final), got {}",
                intermediate + 1,
                intermediate,
                waypoints.len()
            )));
        }
        if !(goal_radius > 0.0) {
            return Err(EnvError::InvalidSequence("goal_radius must be > 0".into()));
        }
        for (i, w) in waypoints.iter().enumerate() {
            if net.signed_distance(*w) >= 0.0 {
                return Err(EnvError::WaypointOutsideLumen(i));
            }
        }
        Ok(Self { waypoints, goal_radius, label })
    }

    pub fn final_target(&self) -> Vec3 {
        *self.waypoints.last().unwrap()
    }
}

/// The centerline polyline a sequence spans, used for progress metrics.
#[derive(Debug, Clone)]
pub struct Route {
    points: Vec<Vec3>,
    cum: Vec<f64>,
}

impl Route {
    fn from_points(points: Vec<Vec3>) -> Self {
        assert!(points.len() >= 2);
        let mut cum = Vec::with_capacity(points.len());
        let mut s = 0.0;
        cum.push(0.0);
        for w in points.windows(2) {
            s += (w[1] - w[0]).norm();
            cum.push(s);
        }
        Self { points, cum }
    }

    pub fn total_arclength(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn point_at(&self, s: f64) -> Vec3 {
        if s <= 0.0 {
            return self.points[0];
        }
        if s >= self.total_arclength() {
            return *self.points.last().unwrap();
        }
        let idx = match self.cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let idx = idx.min(self.points.len() - 2);
        let t = (s - self.cum[idx]) / (self.cum[idx + 1] - self.cum[idx]);
        self.points[idx] + t * (self.points[idx + 1] - self.points[idx])
    }

    /// Arclength of the route point nearest to `p`.
    ///
    /// With `prev_s` the search is restricted to a window around the
    /// previous projection, which keeps the projection continuous where
    /// distinct route sections pass close to each other.
    pub fn project(&self, p: Vec3, prev_s: Option<f64>) -> f64 {
        const WINDOW: f64 = 2.0;
        let (lo, hi) = match prev_s {
            Some(s) => (s - WINDOW, s + WINDOW),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..self.points.len() - 1 {
            if self.cum[i + 1] < lo || self.cum[i] > hi {
                continue;
            }
            let a = self.points[i];
            let d = self.points[i + 1] - a;
            let len2 = d.norm_squared();
            let t = if len2 > 0.0 { ((p - a).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let q = a + t * d;
            let dist = (p - q).norm();
            if dist < best.0 {
                best = (dist, self.cum[i] + t * len2.sqrt());
            }
        }
        best.1
    }
}

/// Centerline route from `(segment 0, start_s)` to the tip of `tip_segment`.
pub fn build_route(net: &VesselNetwork, tip_segment: usize, start_s: f64) -> Route {
    // chain of segments from the tip back to the trunk
    let mut chain = vec![tip_segment];
    let mut cursor = tip_segment;
    while let Some(att) = net.attachment(cursor) {
        cursor = att.parent;
        chain.push(cursor);
    }
    chain.reverse();

    let mut points: Vec<Vec3> = Vec::new();
    let mut from_s = start_s;
    for (ci, &seg_idx) in chain.iter().enumerate() {
        let seg = &net.segments()[seg_idx];
        let to_s = if ci + 1 < chain.len() {
            // leave this segment where the next chain element attaches
            net.attachment(chain[ci + 1]).map(|a| a.parent_s).unwrap_or(seg.total_arclength())
        } else {
            seg.total_arclength()
        };
        append_leg(&mut points, seg, from_s, to_s);
        from_s = 0.0; // children start at their attachment point
    }
    Route::from_points(points)
}

fn append_leg(points: &mut Vec<Vec3>, seg: &super::CenterlineSegment, from_s: f64, to_s: f64) {
    let push = |points: &mut Vec<Vec3>, p: Vec3| {
        if points.last().map(|l| (l - p).norm() > 1e-12).unwrap_or(true) {
            points.push(p);
        }
    };
    push(points, seg.point_at(from_s));
    let samples = seg.samples();
    if to_s >= from_s {
        for smp in samples {
            if smp.arclength > from_s && smp.arclength < to_s {
                push(points, smp.point);
            }
        }
    } else {
        for smp in samples.iter().rev() {
            if smp.arclength < from_s && smp.arclength > to_s {
                push(points, smp.point);
            }
        }
    }
    push(points, seg.point_at(to_s));
}

/// Tips of the network that are not extended by another segment.
pub fn free_tips(net: &VesselNetwork) -> Vec<usize> {
    let n = net.segments().len();
    let mut extended = vec![false; n];
    for i in 0..n {
        if let Some(att) = net.attachment(i) {
            if !att.is_branch {
                extended[att.parent] = true;
            }
        }
    }
    (0..n).filter(|&i| !extended[i]).collect()
}

/// Deterministically generates `count` waypoint sequences over the free
/// tips of the network, the first half labelled seen and the rest unseen.
///
/// Each sequence places `intermediate` waypoints on the route centerline
/// at jittered arclength fractions and ends at the route tip.
pub fn generate_sequences(
    net: &VesselNetwork,
    count: usize,
    intermediate: usize,
    goal_radius: f64,
    seed: u64,
    start_s: f64,
) -> Result<Vec<(WaypointSequence, Route)>, EnvError> {
    let tips = free_tips(net);
    assert!(!tips.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = Vec::with_capacity(count);
    let seen_count = count.div_ceil(2);
    for i in 0..count {
        let tip = tips[i % tips.len()];
        let route = build_route(net, tip, start_s);
        let total = route.total_arclength();
        let mut fractions: Vec<f64> = (1..=intermediate)
            .map(|k| {
                let base = k as f64 / (intermediate + 1) as f64;
                (base + rng.gen_range(-0.07..0.07)).clamp(0.05, 0.95)
            })
            .collect();
        fractions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut waypoints: Vec<Vec3> =
            fractions.iter().map(|f| route.point_at(f * total)).collect();
        waypoints.push(route.point_at(total));
        let label = if i < seen_count { SequenceLabel::Seen } else { SequenceLabel::Unseen };
        out.push((WaypointSequence::new(waypoints, goal_radius, label, net, intermediate)?, route));
    }
    Ok(out)
}
