//! Centerline segments: ordered (point, radius, arclength) samples.

use super::EnvError;
use crate::Vec3;

/// One centerline sample of a tube segment.
#[derive(Debug, Clone, Copy)]
pub struct CenterlineSample {
    pub point: Vec3,
    pub radius: f64,
    /// Cumulative arclength from the segment start, starts at 0.
    pub arclength: f64,
}

/// An ordered chain of centerline samples with per-sample radii.
///
/// Invariants checked at construction: radii strictly positive, arclength
/// strictly increasing from zero, consecutive samples closer than the
/// smaller of their two radii, and radius steps bounded by half the
/// smaller neighbouring radius.
#[derive(Debug, Clone)]
pub struct CenterlineSegment {
    samples: Vec<CenterlineSample>,
}

impl CenterlineSegment {
    pub fn new(points_radii: &[(Vec3, f64)]) -> Result<Self, EnvError> {
        if points_radii.len() < 2 {
            return Err(EnvError::InvalidSegment("need at least two samples".into()));
        }
        let mut samples = Vec::with_capacity(points_radii.len());
        let mut arclength = 0.0;
        for (i, &(point, radius)) in points_radii.iter().enumerate() {
            if !point.iter().all(|c| c.is_finite()) || !radius.is_finite() {
                return Err(EnvError::InvalidSegment(format!("non-finite sample {i}")));
            }
            if radius <= 0.0 {
                return Err(EnvError::InvalidSegment(format!(
                    "radius {radius} at sample {i} is not strictly positive"
                )));
            }
            if i > 0 {
                let prev: &CenterlineSample = &samples[i - 1];
                let step = (point - prev.point).norm();
                if step <= 0.0 {
                    return Err(EnvError::InvalidSegment(format!(
                        "duplicate consecutive samples at {i}"
                    )));
                }
                let local = prev.radius.min(radius);
                if step >= local {
                    return Err(EnvError::InvalidSegment(format!(
                        "sample spacing {step} at {i} is not below the local radius {local}"
                    )));
                }
                if (radius - prev.radius).abs() > 0.5 * local {
                    return Err(EnvError::InvalidSegment(format!(
                        "radius step at {i} exceeds half the local radius"
                    )));
                }
                arclength += step;
            }
            samples.push(CenterlineSample { point, radius, arclength });
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[CenterlineSample] {
        &self.samples
    }

    pub fn total_arclength(&self) -> f64 {
        self.samples.last().unwrap().arclength
    }

    /// Index of the sample interval containing arclength `s` (clamped).
    fn interval_at(&self, s: f64) -> (usize, f64) {
        let n = self.samples.len();
        if s <= 0.0 {
            return (0, 0.0);
        }
        if s >= self.total_arclength() {
            return (n - 2, 1.0);
        }
        // binary search over cumulative arclength
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.samples[mid].arclength <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = &self.samples[lo];
        let b = &self.samples[lo + 1];
        let t = (s - a.arclength) / (b.arclength - a.arclength);
        (lo, t)
    }

    /// Linearly interpolated centerline point at arclength `s`.
    pub fn point_at(&self, s: f64) -> Vec3 {
        let (i, t) = self.interval_at(s);
        let a = &self.samples[i];
        let b = &self.samples[i + 1];
        a.point + t * (b.point - a.point)
    }

    /// Linearly interpolated radius at arclength `s`.
    pub fn radius_at(&self, s: f64) -> f64 {
        let (i, t) = self.interval_at(s);
        let a = &self.samples[i];
        let b = &self.samples[i + 1];
        a.radius + t * (b.radius - a.radius)
    }

    /// Unit tangent at arclength `s` (direction of the containing interval).
    pub fn tangent_at(&self, s: f64) -> Vec3 {
        let (i, _) = self.interval_at(s);
        let a = &self.samples[i];
        let b = &self.samples[i + 1];
        (b.point - a.point).normalize()
    }
}
