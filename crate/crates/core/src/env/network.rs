//! Tube-network generation and distance queries.

use super::grid::{Piece, PieceGrid};
use super::segment::CenterlineSegment;
use super::spline::{sample_catmull_rom, ControlKnot};
use super::EnvError;
use crate::Vec3;
use nalgebra::Unit;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Declarative description of a procedural network.
///
/// Serialized as TOML with the documented keys `segments`, `radius_min`,
/// `radius_max`, `curvature_max`, `branch_count`, `segment_length`, `seed`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSpec {
    /// Total number of tube segments, >= 1.
    pub segments: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    /// Centerline curvature bound in radians per world unit.
    pub curvature_max: f64,
    /// Number of segments attached at interior branch points.
    pub branch_count: usize,
    /// Target arclength of each segment.
    pub segment_length: f64,
    /// Generation seed recorded in config files.
    pub seed: u64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            segments: 3,
            radius_min: 0.6,
            radius_max: 1.6,
            curvature_max: 0.25,
            branch_count: 1,
            segment_length: 12.0,
            seed: 0,
        }
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.segments < 1 {
            return Err(EnvError::InvalidSpec("segments must be >= 1".into()));
        }
        if !(self.radius_min > 0.0) {
            return Err(EnvError::InvalidSpec(format!(
                "radius_min must be > 0, got {}",
                self.radius_min
            )));
        }
        if self.radius_max < self.radius_min {
            return Err(EnvError::InvalidSpec("radius_max must be >= radius_min".into()));
        }
        if !(self.curvature_max >= 0.0) || !self.curvature_max.is_finite() {
            return Err(EnvError::InvalidSpec("curvature_max must be finite and >= 0".into()));
        }
        if self.branch_count + 1 > self.segments {
            return Err(EnvError::InvalidSpec(
                "branch_count must be at most segments - 1".into(),
            ));
        }
        if !(self.segment_length > 0.0) {
            return Err(EnvError::InvalidSpec("segment_length must be > 0".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, EnvError> {
        let spec: Self =
            toml::from_str(text).map_err(|e| EnvError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }
}

/// Axis-aligned bounding box of the tube union.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// How a non-root segment connects to the rest of the network.
#[derive(Debug, Clone, Copy)]
pub struct Attachment {
    pub parent: usize,
    pub parent_s: f64,
    pub junction: Vec3,
    /// True when attached at an interior branch point rather than a tip.
    pub is_branch: bool,
}

/// A connected union of capsule-chain tubes with analytic signed distance.
///
/// Immutable after construction; every query is read-only.
#[derive(Debug, Clone)]
pub struct VesselNetwork {
    segments: Vec<CenterlineSegment>,
    attachments: Vec<Option<Attachment>>,
    branch_points: Vec<Vec3>,
    bounding_box: Aabb,
    pieces: Vec<Piece>,
    grid: PieceGrid,
}

/// Sphere-tracing surface tolerance in world units.
pub const SURFACE_TOL: f64 = 1e-4;
/// Sphere-tracing iteration cap.
pub const MAX_TRACE_STEPS: usize = 256;

impl VesselNetwork {
    fn from_parts(
        segments: Vec<CenterlineSegment>,
        attachments: Vec<Option<Attachment>>,
        branch_points: Vec<Vec3>,
    ) -> Self {
        let mut pieces = Vec::new();
        let mut max_radius: f64 = 0.0;
        for (si, seg) in segments.iter().enumerate() {
            let samples = seg.samples();
            for w in samples.windows(2) {
                pieces.push(Piece {
                    a: w[0].point,
                    b: w[1].point,
                    ra: w[0].radius,
                    rb: w[1].radius,
                    seg: si,
                    sa: w[0].arclength,
                });
                max_radius = max_radius.max(w[0].radius).max(w[1].radius);
            }
        }
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for seg in &segments {
            for s in seg.samples() {
                lo = lo.inf(&s.point.add_scalar(-s.radius));
                hi = hi.sup(&s.point.add_scalar(s.radius));
            }
        }
        let cell = (2.0 * max_radius).max(0.5);
        let grid = PieceGrid::build(&pieces, cell);
        Self {
            segments,
            attachments,
            branch_points,
            bounding_box: Aabb { min: [lo.x, lo.y, lo.z], max: [hi.x, hi.y, hi.z] },
            pieces,
            grid,
        }
    }

    pub fn segments(&self) -> &[CenterlineSegment] {
        &self.segments
    }

    /// Builds a network from explicit segments with no junction metadata.
    /// Intended for tests and debugging against hand-made geometry.
    pub fn from_segments_for_tests(segments: Vec<CenterlineSegment>) -> Self {
        let n = segments.len();
        Self::from_parts(segments, vec![None; n], Vec::new())
    }

    pub fn attachment(&self, seg: usize) -> Option<&Attachment> {
        self.attachments[seg].as_ref()
    }

    pub fn branch_points(&self) -> &[Vec3] {
        &self.branch_points
    }

    pub fn bounding_box(&self) -> Aabb {
        self.bounding_box
    }

    pub(crate) fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Signed distance to the tube-union wall: negative inside the lumen,
    /// positive outside, zero on the wall.
    pub fn signed_distance(&self, point: Vec3) -> f64 {
        self.grid.min_signed_distance(&self.pieces, point)
    }

    /// Distance along `dir` from `origin` to the first wall crossing,
    /// clamped to `max_range`, by sphere tracing on the signed distance.
    pub fn raycast(&self, origin: Vec3, dir: Vec3, max_range: f64) -> Result<f64, EnvError> {
        let norm = dir.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(EnvError::NonUnitDirection(norm));
        }
        let sd0 = self.signed_distance(origin);
        if sd0 >= 0.0 {
            return Err(EnvError::OriginOutsideLumen(sd0));
        }
        let mut t = 0.0;
        for _ in 0..MAX_TRACE_STEPS {
            let dist = -self.signed_distance(origin + t * dir);
            if dist < SURFACE_TOL {
                return Ok(t.min(max_range));
            }
            t += dist;
            if t >= max_range {
                return Ok(max_range);
            }
        }
        Ok(t.min(max_range))
    }

    /// Points on the union wall for debugging exports: rings around each
    /// centerline sample, filtered to the parts that survive the union.
    pub fn wall_cloud(&self, ring_points: usize) -> Vec<Vec3> {
        let mut out = Vec::new();
        for seg in &self.segments {
            let samples = seg.samples();
            for (i, s) in samples.iter().enumerate() {
                let tangent = if i + 1 < samples.len() {
                    samples[i + 1].point - s.point
                } else {
                    s.point - samples[i - 1].point
                };
                let tangent = Unit::new_normalize(tangent);
                let ortho = orthonormal_basis(&tangent);
                for k in 0..ring_points {
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / ring_points as f64;
                    let p = s.point + s.radius * (phi.cos() * ortho.0 + phi.sin() * ortho.1);
                    if self.signed_distance(p).abs() <= 1e-6 {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

/// Two unit vectors completing `t` to an orthonormal frame.
fn orthonormal_basis(t: &Unit<Vec3>) -> (Vec3, Vec3) {
    let helper = if t.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = t.cross(&helper).normalize();
    let v = t.cross(&u);
    (u, v)
}

/// Rotates `dir` by `angle` about a random axis perpendicular to it.
fn perturb_direction(dir: Vec3, angle: f64, rng: &mut ChaCha8Rng) -> Vec3 {
    if angle == 0.0 {
        return dir;
    }
    let t = Unit::new_normalize(dir);
    let (u, v) = orthonormal_basis(&t);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let axis = Unit::new_normalize(phi.cos() * u + phi.sin() * v);
    let rot = nalgebra::Rotation3::from_axis_angle(&axis, angle);
    rot * dir
}

struct GrownSegment {
    knots: Vec<ControlKnot>,
    attachment: Option<Attachment>,
}

fn grow_segment(
    start: Vec3,
    start_dir: Vec3,
    start_radius: f64,
    length: f64,
    spec: &NetworkSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<ControlKnot> {
    const CONTROL_STEP: f64 = 1.25;
    let n = ((length / CONTROL_STEP).round() as usize).max(1) + 1;
    let step = length / (n - 1) as f64;

    let mut knots = Vec::with_capacity(n);
    let mut point = start;
    let mut dir = start_dir;
    let mut radius = start_radius;
    knots.push(ControlKnot { point, radius });
    for _ in 1..n {
        let max_turn = spec.curvature_max * step;
        let turn = if max_turn > 0.0 { rng.gen_range(0.25..=1.0) * max_turn } else { 0.0 };
        dir = perturb_direction(dir, turn, rng).normalize();
        point += step * dir;
        let factor: f64 = rng.gen_range(-1.0..=1.0);
        radius = (radius * (1.0 + 0.08 * factor)).clamp(spec.radius_min, spec.radius_max);
        knots.push(ControlKnot { point, radius });
    }
    knots
}

/// Pairwise centerline proximity check over the sampled network.
///
/// Flags any two samples whose tubes would overlap, exempting pairs that
/// are close along the same segment or that both sit near a shared
/// junction (where overlap is the intended union).
fn self_intersects(
    segments: &[CenterlineSegment],
    attachments: &[Option<Attachment>],
) -> bool {
    let adjacent = |a: usize, b: usize| -> Option<Vec3> {
        if let Some(att) = &attachments[b] {
            if att.parent == a {
                return Some(att.junction);
            }
        }
        if let Some(att) = &attachments[a] {
            if att.parent == b {
                return Some(att.junction);
            }
        }
        None
    };
    for (ai, sa) in segments.iter().enumerate() {
        for (bi, sb) in segments.iter().enumerate().skip(ai) {
            let junction = if ai == bi { None } else { adjacent(ai, bi) };
            if ai != bi && junction.is_none() && !overlap_possible(sa, sb) {
                continue;
            }
            for pa in sa.samples() {
                for pb in sb.samples() {
                    let rsum = pa.radius + pb.radius;
                    if ai == bi {
                        if (pa.arclength - pb.arclength).abs() <= 2.5 * rsum {
                            continue;
                        }
                    } else if let Some(j) = junction {
                        if (pa.point - j).norm() <= 2.5 * rsum && (pb.point - j).norm() <= 2.5 * rsum {
                            continue;
                        }
                    }
                    if (pa.point - pb.point).norm() < rsum {
                        return true;
                    }
                }
            }
        }
    }
    false
}

fn overlap_possible(a: &CenterlineSegment, b: &CenterlineSegment) -> bool {
    let bbox = |s: &CenterlineSegment| {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in s.samples() {
            lo = lo.inf(&p.point.add_scalar(-p.radius));
            hi = hi.sup(&p.point.add_scalar(p.radius));
        }
        (lo, hi)
    };
    let (alo, ahi) = bbox(a);
    let (blo, bhi) = bbox(b);
    (0..3).all(|i| alo[i] <= bhi[i] && blo[i] <= ahi[i])
}

/// Generates a connected tube network; pure function of `(seed, spec)`.
pub fn generate_network(seed: u64, spec: &NetworkSpec) -> Result<VesselNetwork, EnvError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_spacing = 0.4 * spec.radius_min;

    const MAX_ATTEMPTS: usize = 24;
    for _ in 0..MAX_ATTEMPTS {
        match try_generate(spec, &mut rng, max_spacing) {
            Some((segments, attachments, branch_points)) => {
                return Ok(VesselNetwork::from_parts(segments, attachments, branch_points));
            }
            None => continue,
        }
    }
    Err(EnvError::SelfIntersecting)
}

type NetworkParts = (Vec<CenterlineSegment>, Vec<Option<Attachment>>, Vec<Vec3>);

fn try_generate(
    spec: &NetworkSpec,
    rng: &mut ChaCha8Rng,
    max_spacing: f64,
) -> Option<NetworkParts> {
    let mut grown: Vec<GrownSegment> = Vec::with_capacity(spec.segments);
    let trunk_radius = if spec.radius_max > spec.radius_min {
        rng.gen_range(spec.radius_min..=spec.radius_max)
    } else {
        spec.radius_min
    };
    grown.push(GrownSegment {
        knots: grow_segment(Vec3::zeros(), Vec3::x(), trunk_radius, spec.segment_length, spec, rng),
        attachment: None,
    });

    // tips available for straight-through extension: (segment, knot index of tip)
    let mut free_tips: Vec<usize> = vec![0];

    for j in 1..spec.segments {
        let is_branch = j <= spec.branch_count;
        let length = spec.segment_length * rng.gen_range(0.8..=1.0);
        if is_branch {
            let parent = rng.gen_range(0..grown.len());
            let pk = &grown[parent].knots;
            let idx = rng.gen_range(pk.len() / 4..(3 * pk.len() / 4).max(pk.len() / 4 + 1));
            let junction = pk[idx].point;
            let parent_dir = (pk[(idx + 1).min(pk.len() - 1)].point
                - pk[idx.saturating_sub(1)].point)
                .normalize();
            let angle = rng.gen_range(0.6..=1.1);
            let dir = perturb_direction(parent_dir, angle, rng).normalize();
            let radius = (pk[idx].radius * rng.gen_range(0.75..=1.0))
                .clamp(spec.radius_min, spec.radius_max);
            let parent_s = estimate_knot_arclength(pk, idx);
            grown.push(GrownSegment {
                knots: grow_segment(junction, dir, radius, length, spec, rng),
                attachment: Some(Attachment { parent, parent_s, junction, is_branch: true }),
            });
        } else {
            let tip_of = if free_tips.is_empty() {
                rng.gen_range(0..grown.len())
            } else {
                free_tips.remove(rng.gen_range(0..free_tips.len()))
            };
            let pk = &grown[tip_of].knots;
            let junction = pk[pk.len() - 1].point;
            let dir = (pk[pk.len() - 1].point - pk[pk.len() - 2].point).normalize();
            let radius = pk[pk.len() - 1].radius;
            let parent_s = estimate_knot_arclength(pk, pk.len() - 1);
            grown.push(GrownSegment {
                knots: grow_segment(junction, dir, radius, length, spec, rng),
                attachment: Some(Attachment { parent: tip_of, parent_s, junction, is_branch: false }),
            });
        }
        free_tips.push(j);
    }

    let mut segments = Vec::with_capacity(grown.len());
    for g in &grown {
        let sampled = sample_catmull_rom(&g.knots, max_spacing);
        let pts: Vec<(Vec3, f64)> = sampled.iter().map(|k| (k.point, k.radius)).collect();
        match CenterlineSegment::new(&pts) {
            Ok(seg) => segments.push(seg),
            Err(_) => return None,
        }
    }
    let attachments: Vec<Option<Attachment>> = grown.iter().map(|g| g.attachment).collect();
    if self_intersects(&segments, &attachments) {
        return None;
    }
    let branch_points = attachments
        .iter()
        .flatten()
        .filter(|a| a.is_branch)
        .map(|a| a.junction)
        .collect();
    Some((segments, attachments, branch_points))
}

fn estimate_knot_arclength(knots: &[ControlKnot], idx: usize) -> f64 {
    knots
        .windows(2)
        .take(idx)
        .map(|w| (w[1].point - w[0].point).norm())
        .sum()
}

/// Breadth-first connectivity over segment adjacency.
pub fn is_connected(net: &VesselNetwork) -> bool {
    let n = net.segments().len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        if let Some(att) = net.attachment(i) {
            adj[i].push(att.parent);
            adj[att.parent].push(i);
        }
    }
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
