//! Action decode for the pure-RL baseline, which predicts the linear
//! velocity directly instead of DWA weights.

use crate::agent::AgentError;
use crate::kinematics::KinematicLimits;
use crate::Vec3;

/// Raw action dimension: 3 velocity + 1 roll + 3 deformation rates.
pub const PURE_RL_ACTION_DIM: usize = 7;

/// Decoded pure-RL command. The velocity is a desire; the episode
/// pipeline additionally clips it into the dynamic window so both
/// learning methods share actuation limits.
#[derive(Debug, Clone, Copy)]
pub struct PureRlAction {
    pub v: Vec3,
    pub omega_x: f64,
    pub delta_rate: Vec3,
}

pub fn decode_pure_action(raw: &[f64], limits: &KinematicLimits) -> Result<PureRlAction, AgentError> {
    if raw.len() != PURE_RL_ACTION_DIM {
        return Err(AgentError::ActionDim { expected: PURE_RL_ACTION_DIM, got: raw.len() });
    }
    Ok(PureRlAction {
        v: Vec3::new(raw[0] * limits.v_max[0], raw[1] * limits.v_max[1], raw[2] * limits.v_max[2]),
        omega_x: raw[3] * limits.omega_x_max,
        delta_rate: Vec3::new(
            raw[4] * limits.delta_rate_max[0],
            raw[5] * limits.delta_rate_max[1],
            raw[6] * limits.delta_rate_max[2],
        ),
    })
}
