//! 9-DoF robot state and its integration: translation plus deformation,
//! the alignment-constrained rotation, and collision predicates against
//! the lumen.

use crate::env::VesselNetwork;
use crate::{Quat, Vec3, V_EPS};
use nalgebra::{Rotation3, Unit};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("velocity norm {0} is below the alignment threshold; passive rotation undefined")]
    ZeroVelocity(f64),
}

/// Geometry of the deformable ellipsoid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotConfig {
    /// Semi-axis length at deformation 1.
    pub nominal_radius: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self { nominal_radius: 0.25, delta_min: 0.4, delta_max: 2.5 }
    }
}

/// Actuation bounds and the control interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct KinematicLimits {
    pub v_max: [f64; 3],
    pub a_max: [f64; 3],
    pub omega_x_max: f64,
    pub delta_rate_max: [f64; 3],
    pub dt: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self {
            v_max: [1.0, 1.0, 1.0],
            a_max: [2.0, 2.0, 2.0],
            omega_x_max: std::f64::consts::PI,
            delta_rate_max: [0.5, 0.5, 0.5],
            dt: 0.1,
        }
    }
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<(), String> {
        let all = self
            .v_max
            .iter()
            .chain(self.a_max.iter())
            .chain(self.delta_rate_max.iter())
            .chain([&self.omega_x_max, &self.dt]);
        for v in all {
            if !(v.is_finite() && *v > 0.0) {
                return Err(format!("kinematic limits must be strictly positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn v_max_vec(&self) -> Vec3 {
        Vec3::from(self.v_max)
    }

    pub fn a_max_vec(&self) -> Vec3 {
        Vec3::from(self.a_max)
    }

    pub fn delta_rate_max_vec(&self) -> Vec3 {
        Vec3::from(self.delta_rate_max)
    }
}

/// Full robot state: pose, deformation and velocities.
#[derive(Debug, Clone, Copy)]
pub struct RobotState {
    pub p: Vec3,
    pub q: Quat,
    /// Per-axis scale factors on the nominal radius.
    pub delta: Vec3,
    pub v: Vec3,
    /// Controlled roll rate about the body x-axis.
    pub omega_x: f64,
}

impl RobotState {
    /// Robot at rest with spherical shape.
    pub fn at_rest(p: Vec3, q: Quat) -> Self {
        Self { p, q, delta: Vec3::repeat(1.0), v: Vec3::zeros(), omega_x: 0.0 }
    }

    /// Body x-axis in world coordinates.
    pub fn body_x(&self) -> Vec3 {
        self.q * Vec3::x()
    }

    pub const CSV_HEADER: &'static str = "px,py,pz,qx,qy,qz,qw,dx,dy,dz,vx,vy,vz,wx";

    /// Flat CSV row matching [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let q = self.q.quaternion();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.p.x,
            self.p.y,
            self.p.z,
            q.i,
            q.j,
            q.k,
            q.w,
            self.delta.x,
            self.delta.y,
            self.delta.z,
            self.v.x,
            self.v.y,
            self.v.z,
            self.omega_x
        )
    }
}

fn check_finite(v: &Vec3, what: &'static str) -> Result<(), KinematicsError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(KinematicsError::NonFinite(what))
    }
}

/// Advances position and deformation by one control interval holding the
/// commanded velocities constant. Deformation clamps to the configured
/// bounds; the returned state stores the executed `v`.
pub fn integrate_translation_deformation(
    state: &RobotState,
    v: Vec3,
    delta_rate: Vec3,
    limits: &KinematicLimits,
    robot: &RobotConfig,
) -> Result<RobotState, KinematicsError> {
    check_finite(&v, "v")?;
    check_finite(&delta_rate, "delta_rate")?;
    let mut next = *state;
    next.p = state.p + v * limits.dt;
    next.delta = (state.delta + delta_rate * limits.dt).map(|d| d.clamp(robot.delta_min, robot.delta_max));
    next.v = v;
    Ok(next)
}

/// Relative rotation carrying the current body x-axis onto the direction
/// of `v_next`: the minimal geodesic rotation, so roll is preserved and
/// the x-axis remains the only controlled rotational DoF.
///
/// Antipodal targets are resolved by a half-turn about the current body
/// z-axis. Errors below the speed threshold, where alignment is undefined.
pub fn alignment_rotation(q: &Quat, v_next: Vec3) -> Result<Rotation3<f64>, KinematicsError> {
    check_finite(&v_next, "v_next")?;
    let speed = v_next.norm();
    if speed <= V_EPS {
        return Err(KinematicsError::ZeroVelocity(speed));
    }
    let current = q * Vec3::x();
    let target = v_next / speed;
    let cos = current.dot(&target).clamp(-1.0, 1.0);
    if cos >= 1.0 - 1e-14 {
        return Ok(Rotation3::identity());
    }
    if cos <= -1.0 + 1e-13 {
        let body_z = Unit::new_normalize(q * Vec3::z());
        return Ok(Rotation3::from_axis_angle(&body_z, std::f64::consts::PI));
    }
    let axis = Unit::new_normalize(current.cross(&target));
    Ok(Rotation3::from_axis_angle(&axis, cos.acos()))
}

/// Angular-velocity estimate from the skew-symmetric part of a relative
/// rotation over one control interval.
pub fn passive_angular_velocity(delta_r: &Rotation3<f64>, dt: f64) -> Vec3 {
    let m = delta_r.matrix();
    Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) / (2.0 * dt)
}

/// Integrates the orientation over one interval: the passive component
/// (expressed in the world frame, like the relative rotation it is
/// extracted from) composes on the left, the controlled roll about the
/// body x-axis composes on the right. Result is renormalized.
pub fn integrate_orientation(q: &Quat, omega_hat: Vec3, omega_x: f64, dt: f64) -> Quat {
    let passive = Quat::from_scaled_axis(omega_hat * dt);
    let roll = Quat::from_scaled_axis(Vec3::new(omega_x * dt, 0.0, 0.0));
    let mut out = (passive * q * roll).into_inner();
    out.normalize_mut();
    Quat::new_unchecked(out)
}

/// Orientation update used by the episode pipeline: applies the full
/// alignment rotation (not its skew-part approximation) so the body
/// x-axis lands exactly on the motion direction, then rolls about it.
pub fn integrate_orientation_exact(
    q: &Quat,
    delta_r: &Rotation3<f64>,
    omega_x: f64,
    dt: f64,
) -> Quat {
    let passive = Quat::from_rotation_matrix(delta_r);
    let roll = Quat::from_scaled_axis(Vec3::new(omega_x * dt, 0.0, 0.0));
    let mut out = (passive * q * roll).into_inner();
    out.normalize_mut();
    Quat::new_unchecked(out)
}

/// Quasi-uniform unit directions (Fibonacci sphere).
pub(crate) fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden_angle * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z).normalize()
        })
        .collect()
}

/// Surface-sample count for the collision predicate.
pub const COLLISION_SAMPLES: usize = 256;

/// True when the deformed ellipsoid touches or crosses the wall.
///
/// Samples the surface at quasi-uniform points (plus the center, which
/// covers the robot straddling a wall wedge) and checks the signed
/// distance of each.
pub fn collision_check(state: &RobotState, net: &VesselNetwork, robot: &RobotConfig) -> bool {
    if net.signed_distance(state.p) >= 0.0 {
        return true;
    }
    let semi = robot.nominal_radius * state.delta;
    for d in fibonacci_directions(COLLISION_SAMPLES) {
        let surface = state.p + state.q * Vec3::new(semi.x * d.x, semi.y * d.y, semi.z * d.z);
        if net.signed_distance(surface) >= 0.0 {
            return true;
        }
    }
    false
}

/// True when the robot center has left the lumen.
pub fn is_outside(state: &RobotState, net: &VesselNetwork) -> bool {
    net.signed_distance(state.p) >= 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_network, NetworkSpec};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn limits() -> KinematicLimits {
        KinematicLimits::default()
    }

    #[test]
    fn translation_substitution() {
        let s = RobotState::at_rest(Vec3::zeros(), Quat::identity());
        let next = integrate_translation_deformation(
            &s,
            Vec3::new(1.0, 2.0, 3.0),
            Vec3::zeros(),
            &limits(),
            &RobotConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(next.p.x, 0.1, epsilon = 1e-15);
        assert_relative_eq!(next.p.y, 0.2, epsilon = 1e-15);
        assert_relative_eq!(next.p.z, 0.3, epsilon = 1e-15);
        assert_eq!(next.v, Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn deformation_identity_and_clamp() {
        let mut s = RobotState::at_rest(Vec3::zeros(), Quat::identity());
        let next =
            integrate_translation_deformation(&s, Vec3::zeros(), Vec3::zeros(), &limits(), &RobotConfig::default())
                .unwrap();
        assert_eq!(next.delta, Vec3::repeat(1.0));

        s.delta = Vec3::new(2.45, 1.0, 1.0);
        let next = integrate_translation_deformation(
            &s,
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            &limits(),
            &RobotConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(next.delta.x, 2.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let s = RobotState::at_rest(Vec3::zeros(), Quat::identity());
        assert!(integrate_translation_deformation(
            &s,
            Vec3::new(f64::NAN, 0.0, 0.0),
            Vec3::zeros(),
            &limits(),
            &RobotConfig::default()
        )
        .is_err());
    }

    #[test]
    fn alignment_identity_when_aligned() {
        let q = Quat::identity();
        let dr = alignment_rotation(&q, Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((dr.matrix() - nalgebra::Matrix3::identity()).norm() < 1e-12);
    }

    #[test]
    fn alignment_quarter_turn_entrywise() {
        let q = Quat::identity();
        let dr = alignment_rotation(&q, Vec3::new(0.0, 3.0, 0.0)).unwrap();
        // 90 degrees about +z
        let expected =
            Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::z()), std::f64::consts::FRAC_PI_2);
        assert!((dr.matrix() - expected.matrix()).norm() < 1e-12);
    }

    #[test]
    fn alignment_antipodal_flips_x() {
        let q = Quat::identity();
        let dr = alignment_rotation(&q, Vec3::new(-1.0, 0.0, 0.0)).unwrap();
        let flipped = dr * Vec3::x();
        assert_relative_eq!(flipped.x, -1.0, epsilon = 1e-12);
        assert!(flipped.y.abs() < 1e-12 && flipped.z.abs() < 1e-12);
    }

    #[test]
    fn alignment_rejects_rest() {
        let q = Quat::identity();
        assert!(alignment_rotation(&q, Vec3::zeros()).is_err());
    }

    #[test]
    fn passive_omega_identity() {
        let w = passive_angular_velocity(&Rotation3::identity(), 0.1);
        assert_eq!(w, Vec3::zeros());
    }

    #[test]
    fn passive_omega_z_rotation() {
        let dr = Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::z()), 0.1);
        let w = passive_angular_velocity(&dr, 0.1);
        assert_relative_eq!(w.z, (0.1_f64).sin() / 0.1, epsilon = 1e-12);
        assert!(w.x.abs() < 1e-12 && w.y.abs() < 1e-12);
    }

    #[test]
    fn passive_omega_small_angle_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let axis = Unit::new_normalize(Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ));
            let theta: f64 = rng.gen_range(1e-4..0.3);
            let dt = 0.1;
            let dr = Rotation3::from_axis_angle(&axis, theta);
            let w = passive_angular_velocity(&dr, dt);
            let err = (w * dt - theta * axis.into_inner()).norm();
            assert!(err <= theta.powi(3), "err {err} vs theta^3 {}", theta.powi(3));
        }
    }

    #[test]
    fn orientation_identity_under_zero_rates() {
        let q = Quat::from_scaled_axis(Vec3::new(0.3, -0.2, 0.9));
        let out = integrate_orientation(&q, Vec3::zeros(), 0.0, 0.1);
        assert!((out.quaternion().coords - q.quaternion().coords).norm() < 1e-15);
    }

    #[test]
    fn orientation_pure_roll_closed_form() {
        let dt = 0.1;
        let out = integrate_orientation(
            &Quat::identity(),
            Vec3::zeros(),
            std::f64::consts::FRAC_PI_2 / dt,
            dt,
        );
        let q = out.quaternion();
        assert_relative_eq!(q.i, (std::f64::consts::FRAC_PI_4).sin(), epsilon = 1e-9);
        assert_relative_eq!(q.w, (std::f64::consts::FRAC_PI_4).cos(), epsilon = 1e-9);
        assert!(q.j.abs() < 1e-12 && q.k.abs() < 1e-12);
    }

    #[test]
    fn quaternion_norm_preserved_over_many_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut q = Quat::identity();
        for _ in 0..100_000 {
            let w = Vec3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let wx = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            q = integrate_orientation(&q, w, wx, 0.1);
        }
        assert!((q.quaternion().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alignment_converges_with_approximate_integration() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let mut q = Quat::from_scaled_axis(Vec3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ));
            let v = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if v.norm() < 0.1 {
                continue;
            }
            let angle_to = |q: &Quat| (q * Vec3::x()).dot(&v.normalize()).clamp(-1.0, 1.0).acos();
            let mut prev = angle_to(&q);
            for _ in 0..60 {
                if prev < 1e-3 {
                    break;
                }
                let dr = alignment_rotation(&q, v).unwrap();
                let w = passive_angular_velocity(&dr, 0.1);
                q = integrate_orientation(&q, w, 0.0, 0.1);
                let now = angle_to(&q);
                assert!(now < prev + 1e-12, "alignment error grew: {prev} -> {now}");
                prev = now;
            }
            assert!(prev < 1e-3, "did not converge, residual {prev}");
        }
    }

    #[test]
    fn exact_alignment_lands_on_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let q = Quat::from_scaled_axis(Vec3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ));
            let v = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if v.norm() < 0.05 {
                continue;
            }
            let dr = alignment_rotation(&q, v).unwrap();
            let q2 = integrate_orientation_exact(&q, &dr, 0.4, 0.1);
            // vector-difference residual resolves far below the acos floor
            let residual = (q2 * Vec3::x() - v.normalize()).norm();
            assert!(residual < 1e-7, "residual alignment error {residual}");
        }
    }

    fn straight_tube() -> crate::env::VesselNetwork {
        let spec = NetworkSpec {
            segments: 1,
            radius_min: 1.0,
            radius_max: 1.0,
            curvature_max: 0.0,
            branch_count: 0,
            segment_length: 10.0,
            seed: 0,
        };
        generate_network(0, &spec).unwrap()
    }

    #[test]
    fn collision_sphere_clearance() {
        let net = straight_tube();
        let state = RobotState::at_rest(Vec3::new(5.0, 0.0, 0.0), Quat::identity());
        assert!(!collision_check(&state, &net, &RobotConfig::default()));
    }

    #[test]
    fn collision_overdeformed_axis() {
        let net = straight_tube();
        let mut state = RobotState::at_rest(Vec3::new(5.0, 0.0, 0.0), Quat::identity());
        state.delta = Vec3::new(1.0, 4.5, 1.0); // semi-axis 1.125 exceeds tube radius 1
        assert!(collision_check(&state, &net, &RobotConfig::default()));
    }

    #[test]
    fn collision_center_outside() {
        let net = straight_tube();
        let state = RobotState::at_rest(Vec3::new(5.0, 3.0, 0.0), Quat::identity());
        assert!(collision_check(&state, &net, &RobotConfig::default()));
    }

    #[test]
    fn outside_predicate_on_boundary() {
        let net = straight_tube();
        let on_axis = RobotState::at_rest(Vec3::new(5.0, 0.0, 0.0), Quat::identity());
        let at_wall = RobotState::at_rest(Vec3::new(5.0, 1.0, 0.0), Quat::identity());
        let beyond = RobotState::at_rest(Vec3::new(5.0, 1.5, 0.0), Quat::identity());
        assert!(!is_outside(&on_axis, &net));
        assert!(is_outside(&at_wall, &net));
        assert!(is_outside(&beyond, &net));
    }

    #[test]
    fn csv_row_field_order() {
        let mut s = RobotState::at_rest(Vec3::new(1.0, 2.0, 3.0), Quat::identity());
        s.omega_x = 0.5;
        let row = s.csv_row();
        assert_eq!(row, "1,2,3,0,0,0,1,1,1,1,0,0,0,0.5");
        assert_eq!(RobotState::CSV_HEADER.split(',').count(), row.split(',').count());
    }
}
