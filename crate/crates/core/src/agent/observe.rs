//! Observation and action codecs for the hybrid controller.

use super::AgentError;
use crate::dwa::DwaWeights;
use crate::kinematics::{KinematicLimits, RobotState};
use crate::{Vec3, V_EPS};

/// Structured observation: deformation, unit velocity, unit goal offset
/// and the normalized scan block.
#[derive(Debug, Clone)]
pub struct Observation {
    pub delta: Vec3,
    pub v_unit: Vec3,
    pub d_goal: Vec3,
    /// Scan readings divided by the rig max range, each in [0, 1].
    pub scan: Vec<f64>,
}

impl Observation {
    pub fn dim(&self) -> usize {
        9 + self.scan.len()
    }

    /// Flat layout `[delta, v_unit, d_goal, scan]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(self.delta.as_slice());
        out.extend_from_slice(self.v_unit.as_slice());
        out.extend_from_slice(self.d_goal.as_slice());
        out.extend_from_slice(&self.scan);
        out
    }
}

/// Builds the observation for the current waypoint. The velocity block is
/// the zero vector at rest, and likewise the goal block when the robot
/// sits exactly on the waypoint.
pub fn encode_observation(
    state: &RobotState,
    scan: &[f64],
    max_range: f64,
    waypoint: Vec3,
) -> Result<Observation, AgentError> {
    if !state.p.iter().chain(state.v.iter()).chain(state.delta.iter()).all(|v| v.is_finite()) {
        return Err(AgentError::NonFinite("robot state"));
    }
    if !scan.iter().all(|v| v.is_finite()) || !waypoint.iter().all(|v| v.is_finite()) {
        return Err(AgentError::NonFinite("scan or waypoint"));
    }
    let v_unit = if state.v.norm() > V_EPS { state.v / state.v.norm() } else { Vec3::zeros() };
    let goal_delta = waypoint - state.p;
    let d_goal =
        if goal_delta.norm() > V_EPS { goal_delta / goal_delta.norm() } else { Vec3::zeros() };
    Ok(Observation {
        delta: state.delta,
        v_unit,
        d_goal,
        scan: scan.iter().map(|v| (v / max_range).clamp(0.0, 1.0)).collect(),
    })
}

/// Decoded hybrid-controller action.
#[derive(Debug, Clone, Copy)]
pub struct RlAction {
    pub weights: DwaWeights,
    pub omega_x: f64,
    pub delta_rate: Vec3,
}

/// Raw action dimension of the hybrid controller.
pub const RL_ACTION_DIM: usize = 8;

/// Affine decode from the policy's `(-1,1)^8` output: four weights map to
/// `[0,1]`, the roll rate and deformation rates scale to their bounds.
pub fn decode_action(raw: &[f64], limits: &KinematicLimits) -> Result<RlAction, AgentError> {
    if raw.len() != RL_ACTION_DIM {
        return Err(AgentError::ActionDim { expected: RL_ACTION_DIM, got: raw.len() });
    }
    let w = |i: usize| (raw[i] + 1.0) / 2.0;
    Ok(RlAction {
        weights: DwaWeights::new(w(0), w(1), w(2), w(3)),
        omega_x: raw[4] * limits.omega_x_max,
        delta_rate: Vec3::new(
            raw[5] * limits.delta_rate_max[0],
            raw[6] * limits.delta_rate_max[1],
            raw[7] * limits.delta_rate_max[2],
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Quat;
    use approx::assert_relative_eq;

    #[test]
    fn rest_state_zeroes_velocity_block() {
        let state = RobotState::at_rest(Vec3::zeros(), Quat::identity());
        let obs = encode_observation(&state, &[4.0, 2.0], 4.0, Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(obs.v_unit, Vec3::zeros());
        assert_eq!(obs.d_goal, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(obs.scan, vec![1.0, 0.5]);
        assert_eq!(obs.dim(), 11);
    }

    #[test]
    fn flat_layout_order() {
        let mut state = RobotState::at_rest(Vec3::zeros(), Quat::identity());
        state.delta = Vec3::new(1.1, 1.2, 1.3);
        state.v = Vec3::new(2.0, 0.0, 0.0);
        let obs = encode_observation(&state, &[4.0], 4.0, Vec3::new(0.0, 3.0, 0.0)).unwrap();
        let flat = obs.to_vec();
        assert_eq!(flat.len(), 10);
        assert_eq!(&flat[0..3], &[1.1, 1.2, 1.3]);
        assert_eq!(&flat[3..6], &[1.0, 0.0, 0.0]);
        assert_eq!(&flat[6..9], &[0.0, 1.0, 0.0]);
        assert_eq!(flat[9], 1.0);
    }

    #[test]
    fn rejects_non_finite() {
        let state = RobotState::at_rest(Vec3::zeros(), Quat::identity());
        assert!(encode_observation(&state, &[f64::NAN], 4.0, Vec3::x()).is_err());
    }

    #[test]
    fn decode_midpoint_and_bounds() {
        let limits = KinematicLimits::default();
        let a = decode_action(&[0.0; 8], &limits).unwrap();
        assert_eq!(a.weights, DwaWeights::new(0.5, 0.5, 0.5, 0.5));
        assert_eq!(a.omega_x, 0.0);
        assert_eq!(a.delta_rate, Vec3::zeros());

        let mut raw = [0.0; 8];
        raw[0] = 0.999_999;
        let a = decode_action(&raw, &limits).unwrap();
        assert!(a.weights.alpha > 0.999_99);
    }

    #[test]
    fn decode_is_affine() {
        use rand::Rng;
        use rand::SeedableRng;
        let limits = KinematicLimits::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let raw: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.999..0.999)).collect();
            let a = decode_action(&raw, &limits).unwrap();
            // hand affine computation
            assert_relative_eq!(a.weights.alpha, (raw[0] + 1.0) / 2.0, epsilon = 1e-15);
            assert_relative_eq!(a.weights.beta, (raw[1] + 1.0) / 2.0, epsilon = 1e-15);
            assert_relative_eq!(a.weights.gamma, (raw[2] + 1.0) / 2.0, epsilon = 1e-15);
            assert_relative_eq!(a.weights.zeta, (raw[3] + 1.0) / 2.0, epsilon = 1e-15);
            assert_relative_eq!(a.omega_x, raw[4] * limits.omega_x_max, epsilon = 1e-15);
            for i in 0..3 {
                assert_relative_eq!(a.delta_rate[i], raw[5 + i] * limits.delta_rate_max[i], epsilon = 1e-15);
                assert!(a.delta_rate[i].abs() <= limits.delta_rate_max[i]);
            }
            assert!(a.omega_x.abs() <= limits.omega_x_max);
        }
    }
}
