//! Body-frame laser rigs and scan utilities.

use super::network::VesselNetwork;
use super::EnvError;
use crate::{Quat, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// N laser directions fixed in the robot body frame, evenly spread over
/// the sphere by the Fibonacci construction.
#[derive(Debug, Clone)]
pub struct LaserRig {
    directions: Vec<Vec3>,
    max_range: f64,
}

impl LaserRig {
    /// Builds an `n`-beam rig with the Fibonacci-sphere layout.
    pub fn fibonacci(n: usize, max_range: f64) -> Self {
        assert!(n >= 1);
        assert!(max_range > 0.0);
        let golden_angle = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
        let directions = (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden_angle * i as f64;
                Vec3::new(r * phi.cos(), r * phi.sin(), z).normalize()
            })
            .collect();
        Self { directions, max_range }
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    /// Smallest pairwise angle between beams, in radians.
    pub fn min_pairwise_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.directions.len() {
            for j in i + 1..self.directions.len() {
                let cos = self.directions[i].dot(&self.directions[j]).clamp(-1.0, 1.0);
                best = best.min(cos.acos());
            }
        }
        best
    }
}

/// Raycasts every rig beam from `position`, with beams rotated into the
/// world frame by `orientation`. Output order follows the rig order.
pub fn scan(
    net: &VesselNetwork,
    position: Vec3,
    orientation: Quat,
    rig: &LaserRig,
) -> Result<Vec<f64>, EnvError> {
    let mut out = Vec::with_capacity(rig.len());
    for d in rig.directions() {
        let world_dir = orientation * d;
        out.push(net.raycast(position, world_dir, rig.max_range())?);
    }
    Ok(out)
}

/// World-frame wall-hit points of a scan; readings at max range saw free
/// space and contribute no obstacle point.
pub fn wall_hit_points(
    position: Vec3,
    orientation: Quat,
    rig: &LaserRig,
    readings: &[f64],
) -> Vec<Vec3> {
    let cutoff = rig.max_range() * (1.0 - 1e-9);
    rig.directions()
        .iter()
        .zip(readings.iter())
        .filter(|(_, r)| **r < cutoff)
        .map(|(d, r)| position + (orientation * d) * *r)
        .collect()
}

/// Adds i.i.d. zero-mean Gaussian noise per reading and clamps the result
/// to `[0, max_range]`. `sigma = 0` returns the scan unchanged.
pub fn inject_noise(scan: &[f64], sigma: f64, seed: u64, max_range: f64) -> Vec<f64> {
    assert!(sigma >= 0.0);
    if sigma == 0.0 {
        return scan.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    scan.iter()
        .map(|&v| (v + normal.sample(&mut rng)).clamp(0.0, max_range))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_norm() {
        for n in [1, 2, 15, 25, 50, 200] {
            let rig = LaserRig::fibonacci(n, 4.0);
            assert_eq!(rig.len(), n);
            for d in rig.directions() {
                assert!((d.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spread_tracks_uniform_packing() {
        // ideal neighbour separation if each beam owned an equal-area
        // square tile of the sphere: side sqrt(4*pi/N)
        for n in [15, 25, 50] {
            let rig = LaserRig::fibonacci(n, 4.0);
            let ideal = (4.0 * std::f64::consts::PI / n as f64).sqrt();
            let ratio = rig.min_pairwise_angle() / ideal;
            assert!(
                (0.85..=1.15).contains(&ratio),
                "n={n}: min angle {:.4} vs ideal {:.4} (ratio {ratio:.3})",
                rig.min_pairwise_angle(),
                ideal
            );
        }
    }

    #[test]
    fn zero_sigma_is_identity() {
        let scan = vec![0.5, 1.0, 2.0];
        assert_eq!(inject_noise(&scan, 0.0, 7, 4.0), scan);
    }

    #[test]
    fn noise_statistics() {
        let scan = vec![2.0; 100_000];
        let noisy = inject_noise(&scan, 0.1, 42, 100.0);
        let mean: f64 = noisy.iter().sum::<f64>() / noisy.len() as f64;
        let var: f64 =
            noisy.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / noisy.len() as f64;
        let std = var.sqrt();
        assert!((std - 0.1).abs() / 0.1 < 0.03, "empirical std {std}");
        assert!((mean - 2.0).abs() < 0.01);
    }

    #[test]
    fn clamp_keeps_readings_nonnegative() {
        let scan = vec![0.01; 1000];
        let noisy = inject_noise(&scan, 5.0, 3, 4.0);
        assert!(noisy.iter().all(|&v| (0.0..=4.0).contains(&v)));
    }
}
