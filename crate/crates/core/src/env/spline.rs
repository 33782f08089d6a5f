//! Uniform Catmull-Rom interpolation of (point, radius) control polygons.

use crate::Vec3;

/// One control knot: centerline position plus tube radius.
#[derive(Debug, Clone, Copy)]
pub struct ControlKnot {
    pub point: Vec3,
    pub radius: f64,
}

fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * ((2.0 * p1)
        + (-p0 + p2) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3)
}

fn eval_knot(k0: &ControlKnot, k1: &ControlKnot, k2: &ControlKnot, k3: &ControlKnot, t: f64) -> ControlKnot {
    let point = Vec3::new(
        catmull_rom(k0.point.x, k1.point.x, k2.point.x, k3.point.x, t),
        catmull_rom(k0.point.y, k1.point.y, k2.point.y, k3.point.y, t),
        catmull_rom(k0.point.z, k1.point.z, k2.point.z, k3.point.z, t),
    );
    let radius = catmull_rom(k0.radius, k1.radius, k2.radius, k3.radius, t);
    ControlKnot { point, radius }
}

/// Densely samples a Catmull-Rom curve through `knots`.
///
/// End tangents come from mirrored phantom knots, so the curve passes
/// through every knot including the first and last. Each span is split
/// into enough steps that consecutive samples are no farther apart than
/// `max_spacing` (measured on the chord).
pub fn sample_catmull_rom(knots: &[ControlKnot], max_spacing: f64) -> Vec<ControlKnot> {
    assert!(knots.len() >= 2, "need at least two control knots");
    assert!(max_spacing > 0.0);

    let mirror = |a: &ControlKnot, b: &ControlKnot| ControlKnot {
        point: 2.0 * a.point - b.point,
        radius: 2.0 * a.radius - b.radius,
    };
    let first_phantom = mirror(&knots[0], &knots[1]);
    let last_phantom = mirror(&knots[knots.len() - 1], &knots[knots.len() - 2]);

    let mut out: Vec<ControlKnot> = vec![knots[0]];
    for i in 0..knots.len() - 1 {
        let k0 = if i == 0 { first_phantom } else { knots[i - 1] };
        let k1 = knots[i];
        let k2 = knots[i + 1];
        let k3 = if i + 2 < knots.len() { knots[i + 2] } else { last_phantom };

        let chord = (k2.point - k1.point).norm();
        let steps = (chord / max_spacing).ceil().max(1.0) as usize;
        for s in 1..=steps {
            let t = s as f64 / steps as f64;
            out.push(eval_knot(&k0, &k1, &k2, &k3, t));
        }
    }
    out
}
