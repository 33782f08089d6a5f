//! Centerline projection and the observed-segment volume query.

use super::network::VesselNetwork;
use super::{EnvError, LaserRig};
use crate::Vec3;

/// A point on the network centerline: segment index plus arclength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterlineRef {
    pub segment: usize,
    pub s: f64,
}

/// Nearest centerline point to `p`.
///
/// Exact ties between different segments (the branch-junction case) are
/// resolved toward the segment of `prev`; with no history the tie is an
/// error, which can only happen on the first step of an episode.
pub fn project_onto_centerline(
    net: &VesselNetwork,
    p: Vec3,
    prev: Option<CenterlineRef>,
) -> Result<CenterlineRef, EnvError> {
    const TIE_TOL: f64 = 1e-9;
    let mut best: Option<(f64, CenterlineRef)> = None;
    let mut tied: Vec<CenterlineRef> = Vec::new();
    for piece in net.pieces() {
        let t = piece.closest_axis_t(p);
        let point = piece.a + t * (piece.b - piece.a);
        let dist = (p - point).norm();
        let cand = CenterlineRef { segment: piece.seg, s: piece.sa + t * (piece.b - piece.a).norm() };
        match &mut best {
            None => {
                best = Some((dist, cand));
                tied = vec![cand];
            }
            Some((bd, bc)) => {
                if dist < *bd - TIE_TOL {
                    *bd = dist;
                    *bc = cand;
                    tied = vec![cand];
                } else if dist <= *bd + TIE_TOL {
                    tied.push(cand);
                }
            }
        }
    }
    let (_, cand) = best.expect("network has pieces");
    let distinct_segments = tied.iter().any(|c| c.segment != cand.segment);
    if distinct_segments {
        match prev {
            Some(prev) => {
                let pick = tied
                    .iter()
                    .filter(|c| c.segment == prev.segment)
                    .min_by(|a, b| {
                        (a.s - prev.s).abs().partial_cmp(&(b.s - prev.s).abs()).unwrap()
                    })
                    .copied()
                    .unwrap_or(cand);
                Ok(pick)
            }
            None => Err(EnvError::AmbiguousProjection),
        }
    } else {
        Ok(cand)
    }
}

/// Volume of the lumen inside the arclength window `[s - L/2, s + L/2]`
/// around the robot's centerline projection, where `L` is the larger of
/// the wall distances along the forward and backward motion directions,
/// capped at `window_cap`. The window truncates at the segment ends.
///
/// Returns the volume together with the projection used, which callers
/// thread back in as `prev` on the next step.
pub fn observed_segment_volume(
    net: &VesselNetwork,
    position: Vec3,
    motion_dir: Vec3,
    rig: &LaserRig,
    prev: Option<CenterlineRef>,
    window_cap: f64,
) -> Result<(f64, CenterlineRef), EnvError> {
    let proj = project_onto_centerline(net, position, prev)?;
    let fwd = net.raycast(position, motion_dir, rig.max_range())?;
    let back = net.raycast(position, -motion_dir, rig.max_range())?;
    let window = fwd.max(back).min(window_cap);
    let seg = &net.segments()[proj.segment];
    let lo = (proj.s - 0.5 * window).max(0.0);
    let hi = (proj.s + 0.5 * window).min(seg.total_arclength());
    Ok((lumen_volume(seg, lo, hi), proj))
}

/// Integral of pi * r(s)^2 over `[lo, hi]`, exact for the piecewise-linear
/// radius profile of the sampled centerline.
pub fn lumen_volume(seg: &super::CenterlineSegment, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let samples = seg.samples();
    let mut volume = 0.0;
    for w in samples.windows(2) {
        let (s0, s1) = (w[0].arclength, w[1].arclength);
        let a = lo.max(s0);
        let b = hi.min(s1);
        if b <= a {
            continue;
        }
        let lerp = |s: f64| {
            let t = (s - s0) / (s1 - s0);
            w[0].radius + t * (w[1].radius - w[0].radius)
        };
        let (ra, rb) = (lerp(a), lerp(b));
        volume += std::f64::consts::PI * (b - a) * (ra * ra + ra * rb + rb * rb) / 3.0;
    }
    volume
}
