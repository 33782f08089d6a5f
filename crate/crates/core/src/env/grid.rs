//! Uniform-grid acceleration for capsule-chain distance queries.

use crate::Vec3;

/// One link of a capsule chain: a line segment with linearly varying radius.
#[derive(Debug, Clone, Copy)]
pub struct Piece {
    pub a: Vec3,
    pub b: Vec3,
    pub ra: f64,
    pub rb: f64,
    /// Segment index this piece belongs to.
    pub seg: usize,
    /// Arclength of endpoint `a` within its segment.
    pub sa: f64,
}

impl Piece {
    /// min over t in [0,1] of |p - (a + t (b-a))| - (ra + t (rb-ra)).
    ///
    /// The objective is convex in t (a norm minus a linear term), so the
    /// minimum sits at an interior critical point or at an endpoint. The
    /// critical points solve a quadratic obtained by squaring the
    /// stationarity condition; spurious roots only ever evaluate higher.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        let d = self.b - self.a;
        let u = p - self.a;
        let l2 = d.norm_squared();
        let w = self.rb - self.ra;
        let ud = u.dot(&d);

        let eval = |t: f64| (u - t * d).norm() - (self.ra + t * w);

        let mut best = eval(0.0).min(eval(1.0));
        let denom = l2 - w * w;
        if denom > 1e-12 {
            if w == 0.0 {
                let t = (ud / l2).clamp(0.0, 1.0);
                best = best.min(eval(t));
            } else {
                // t^2 l2 (l2-w^2) - 2 t ud (l2-w^2) + ud^2 - w^2 |u|^2 = 0
                let a_q = l2 * denom;
                let b_q = -2.0 * ud * denom;
                let c_q = ud * ud - w * w * u.norm_squared();
                let disc = b_q * b_q - 4.0 * a_q * c_q;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    for root in [(-b_q + sq) / (2.0 * a_q), (-b_q - sq) / (2.0 * a_q)] {
                        if root.is_finite() {
                            best = best.min(eval(root.clamp(0.0, 1.0)));
                        }
                    }
                }
            }
        }
        best
    }

    /// Closest centerline parameter to `p` (plain point-to-segment, used
    /// for centerline projection rather than wall distance).
    pub fn closest_axis_t(&self, p: Vec3) -> f64 {
        let d = self.b - self.a;
        let l2 = d.norm_squared();
        if l2 <= 0.0 {
            return 0.0;
        }
        ((p - self.a).dot(&d) / l2).clamp(0.0, 1.0)
    }

    fn inflated_min(&self) -> Vec3 {
        let r = self.ra.max(self.rb);
        Vec3::new(
            self.a.x.min(self.b.x) - r,
            self.a.y.min(self.b.y) - r,
            self.a.z.min(self.b.z) - r,
        )
    }

    fn inflated_max(&self) -> Vec3 {
        let r = self.ra.max(self.rb);
        Vec3::new(
            self.a.x.max(self.b.x) + r,
            self.a.y.max(self.b.y) + r,
            self.a.z.max(self.b.z) + r,
        )
    }
}

/// Uniform grid over piece bounding boxes.
///
/// Cells store the indices of every piece whose radius-inflated bounding
/// box overlaps the cell, so a shell sweep around a query point can stop
/// as soon as the best distance found beats the lower bound of the next
/// unvisited shell.
#[derive(Debug, Clone)]
pub struct PieceGrid {
    origin: Vec3,
    h: f64,
    dims: [i64; 3],
    cells: Vec<Vec<u32>>,
}

impl PieceGrid {
    pub fn build(pieces: &[Piece], cell_size: f64) -> Self {
        assert!(!pieces.is_empty());
        let mut lo = pieces[0].inflated_min();
        let mut hi = pieces[0].inflated_max();
        for p in pieces {
            let pmin = p.inflated_min();
            let pmax = p.inflated_max();
            lo = lo.inf(&pmin);
            hi = hi.sup(&pmax);
        }
        let h = cell_size;
        let dims = [
            (((hi.x - lo.x) / h).floor() as i64 + 1).max(1),
            (((hi.y - lo.y) / h).floor() as i64 + 1).max(1),
            (((hi.z - lo.z) / h).floor() as i64 + 1).max(1),
        ];
        let mut cells = vec![Vec::new(); (dims[0] * dims[1] * dims[2]) as usize];
        for (i, p) in pieces.iter().enumerate() {
            let pmin = p.inflated_min();
            let pmax = p.inflated_max();
            let c0 = Self::coords_of(lo, h, dims, pmin);
            let c1 = Self::coords_of(lo, h, dims, pmax);
            for x in c0[0]..=c1[0] {
                for y in c0[1]..=c1[1] {
                    for z in c0[2]..=c1[2] {
                        let idx = ((x * dims[1] + y) * dims[2] + z) as usize;
                        cells[idx].push(i as u32);
                    }
                }
            }
        }
        Self { origin: lo, h, dims, cells }
    }

    fn coords_of(origin: Vec3, h: f64, dims: [i64; 3], p: Vec3) -> [i64; 3] {
        [
            (((p.x - origin.x) / h).floor() as i64).clamp(0, dims[0] - 1),
            (((p.y - origin.y) / h).floor() as i64).clamp(0, dims[1] - 1),
            (((p.z - origin.z) / h).floor() as i64).clamp(0, dims[2] - 1),
        ]
    }

    /// Unclamped cell coordinates of a query point.
    fn raw_coords(&self, p: Vec3) -> [i64; 3] {
        [
            ((p.x - self.origin.x) / self.h).floor() as i64,
            ((p.y - self.origin.y) / self.h).floor() as i64,
            ((p.z - self.origin.z) / self.h).floor() as i64,
        ]
    }

    /// Minimum signed distance over all pieces, exact.
    ///
    /// Sweeps Chebyshev shells outward from the query cell. A piece not
    /// registered in any cell of shells 0..=k has wall distance at least
    /// k*h from the query point, which bounds the sweep.
    pub fn min_signed_distance(&self, pieces: &[Piece], p: Vec3) -> f64 {
        let c = self.raw_coords(p);
        let cover = (0..3)
            .map(|i| c[i].max(self.dims[i] - 1 - c[i]).max(0))
            .max()
            .unwrap();
        let mut best = f64::INFINITY;
        for k in 0..=cover {
            if best <= (k - 1).max(0) as f64 * self.h && k > 0 {
                break;
            }
            self.visit_shell(c, k, |idx| {
                let sd = pieces[idx as usize].signed_distance(p);
                if sd < best {
                    best = sd;
                }
            });
        }
        best
    }

    /// Calls `f` with the piece indices registered in every cell of the
    /// Chebyshev shell of radius `k` around `c` (duplicates possible).
    fn visit_shell(&self, c: [i64; 3], k: i64, mut f: impl FnMut(u32)) {
        let lo = [
            (c[0] - k).max(0),
            (c[1] - k).max(0),
            (c[2] - k).max(0),
        ];
        let hi = [
            (c[0] + k).min(self.dims[0] - 1),
            (c[1] + k).min(self.dims[1] - 1),
            (c[2] + k).min(self.dims[2] - 1),
        ];
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    let cheb = (x - c[0]).abs().max((y - c[1]).abs()).max((z - c[2]).abs());
                    if cheb != k {
                        continue;
                    }
                    let idx = ((x * self.dims[1] + y) * self.dims[2] + z) as usize;
                    for &pi in &self.cells[idx] {
                        f(pi);
                    }
                }
            }
        }
    }
}
