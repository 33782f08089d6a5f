//! Incremental 3D Delaunay tetrahedralization (Bowyer-Watson).
//!
//! Sized for per-step scan clouds of a few dozen points; insertion scans
//! all live tetrahedra rather than walking. Geometric degeneracies are
//! reported as [`BaselineError::DegenerateCloud`] rather than repaired:
//! with sparse scans that failure is part of the behaviour under test.

use super::BaselineError;
use crate::Vec3;
use nalgebra::Matrix3;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy)]
pub struct Tetrahedron {
    pub v: [usize; 4],
}

/// Result of a tetrahedralization. `points` holds the four synthetic
/// super-tetrahedron vertices first, then the input points; `tets` only
/// reference real points.
#[derive(Debug, Clone)]
pub struct Delaunay {
    pub points: Vec<Vec3>,
    pub tets: Vec<Tetrahedron>,
}

pub const SUPER_VERTS: usize = 4;

fn orient(points: &[Vec3], t: &[usize; 4]) -> f64 {
    let a = points[t[0]];
    Matrix3::from_columns(&[points[t[1]] - a, points[t[2]] - a, points[t[3]] - a]).determinant()
}

/// Circumcenter and squared radius; `None` for near-degenerate tets.
pub fn circumsphere(points: &[Vec3], t: &[usize; 4]) -> Option<(Vec3, f64)> {
    let a = points[t[0]];
    let rows = [points[t[1]] - a, points[t[2]] - a, points[t[3]] - a];
    let m = Matrix3::from_rows(&[rows[0].transpose(), rows[1].transpose(), rows[2].transpose()]);
    let rhs = Vec3::new(
        0.5 * rows[0].norm_squared(),
        0.5 * rows[1].norm_squared(),
        0.5 * rows[2].norm_squared(),
    );
    let sol = m.lu().solve(&rhs)?;
    let center = a + sol;
    Some((center, sol.norm_squared()))
}

fn faces_of(t: &[usize; 4]) -> [[usize; 3]; 4] {
    [[t[0], t[1], t[2]], [t[0], t[1], t[3]], [t[0], t[2], t[3]], [t[1], t[2], t[3]]]
}

fn sorted_face(f: [usize; 3]) -> [usize; 3] {
    let mut f = f;
    f.sort_unstable();
    f
}

/// Bowyer-Watson insertion over a deduplicated point cloud.
pub fn tetrahedralize(input: &[Vec3]) -> Result<Delaunay, BaselineError> {
    // dedup near-coincident points
    let mut points: Vec<Vec3> = Vec::with_capacity(input.len() + SUPER_VERTS);
    let mut cloud: Vec<Vec3> = Vec::new();
    for p in input {
        if cloud.iter().all(|q| (p - q).norm() > 1e-9) {
            cloud.push(*p);
        }
    }
    if cloud.len() < 5 {
        return Err(BaselineError::DegenerateCloud(format!(
            "need at least 5 distinct points, got {}",
            cloud.len()
        )));
    }

    let mut lo = cloud[0];
    let mut hi = cloud[0];
    for p in &cloud {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let center = 0.5 * (lo + hi);
    let scale = 20.0 * ((hi - lo).norm() * 0.5 + 1.0);
    points.push(center + scale * Vec3::new(1.0, 1.0, 1.0));
    points.push(center + scale * Vec3::new(1.0, -1.0, -1.0));
    points.push(center + scale * Vec3::new(-1.0, 1.0, -1.0));
    points.push(center + scale * Vec3::new(-1.0, -1.0, 1.0));
    points.extend_from_slice(&cloud);

    let mut first = [0usize, 1, 2, 3];
    if orient(&points, &first) < 0.0 {
        first.swap(2, 3);
    }
    let mut tets: Vec<Tetrahedron> = vec![Tetrahedron { v: first }];
    let orient_eps = 1e-10;

    for pi in SUPER_VERTS..points.len() {
        let p = points[pi];
        let mut bad: Vec<usize> = Vec::new();
        for (ti, tet) in tets.iter().enumerate() {
            if let Some((cc, r2)) = circumsphere(&points, &tet.v) {
                if (p - cc).norm_squared() < r2 * (1.0 + 1e-12) {
                    bad.push(ti);
                }
            }
        }
        if bad.is_empty() {
            return Err(BaselineError::DegenerateCloud(
                "insertion point outside every circumsphere".into(),
            ));
        }
        let mut face_count: HashMap<[usize; 3], usize> = HashMap::new();
        for &ti in &bad {
            for f in faces_of(&tets[ti].v) {
                *face_count.entry(sorted_face(f)).or_insert(0) += 1;
            }
        }
        // remove the cavity (descending order keeps indices valid)
        for &ti in bad.iter().rev() {
            tets.swap_remove(ti);
        }
        let mut boundary: Vec<[usize; 3]> =
            face_count.into_iter().filter(|(_, c)| *c == 1).map(|(f, _)| f).collect();
        boundary.sort_unstable();
        for f in boundary {
            let mut t = [f[0], f[1], f[2], pi];
            let o = orient(&points, &t);
            if o.abs() < orient_eps {
                return Err(BaselineError::DegenerateCloud(
                    "degenerate tetrahedron during insertion".into(),
                ));
            }
            if o < 0.0 {
                t.swap(0, 1);
            }
            tets.push(Tetrahedron { v: t });
        }
    }

    tets.retain(|t| t.v.iter().all(|&v| v >= SUPER_VERTS));
    if tets.is_empty() {
        return Err(BaselineError::DegenerateCloud("no tetrahedra survive".into()));
    }
    Ok(Delaunay { points, tets })
}
