//! Tanh-squashed Gaussian policy head.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Numerical floor inside the tanh log-density correction.
pub const SQUASH_EPS: f64 = 1e-6;

const HALF_LOG_TAU: f64 = 0.918_938_533_204_672_7; // 0.5 * ln(2*pi)

/// One reparameterized draw from the squashed policy.
#[derive(Debug, Clone)]
pub struct SquashedSample {
    /// Action strictly inside (-1, 1) per dimension.
    pub action: Vec<f64>,
    /// Log density of the squashed action, including the tanh correction.
    pub log_prob: f64,
    /// Standard normal noise used, kept for gradient computation.
    pub eps: Vec<f64>,
    /// Clamped log standard deviations actually used.
    pub log_std: Vec<f64>,
}

/// Reparameterized sample `a = tanh(mu + sigma * eps)` with
/// `log pi(a) = sum log N(u; mu, sigma) - sum log(1 - a^2 + eps)`.
pub fn sample_action(mean: &[f64], log_std_raw: &[f64], rng: &mut ChaCha8Rng) -> SquashedSample {
    assert_eq!(mean.len(), log_std_raw.len());
    let mut action = Vec::with_capacity(mean.len());
    let mut eps = Vec::with_capacity(mean.len());
    let mut log_std = Vec::with_capacity(mean.len());
    let mut log_prob = 0.0;
    for (m, ls_raw) in mean.iter().zip(log_std_raw.iter()) {
        let ls = ls_raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
        let sigma = ls.exp();
        let e: f64 = rng.sample(StandardNormal);
        let u = m + sigma * e;
        // f64 tanh rounds to exactly +-1 for |u| > ~19; keep the open interval
        let a = u.tanh().clamp(-1.0 + 1e-12, 1.0 - 1e-12);
        log_prob += -ls - HALF_LOG_TAU - 0.5 * e * e;
        log_prob -= (1.0 - a * a + SQUASH_EPS).ln();
        action.push(a);
        eps.push(e);
        log_std.push(ls);
    }
    SquashedSample { action, log_prob, eps, log_std }
}

/// Deterministic evaluation action: the squashed mean.
pub fn squash_mean(mean: &[f64]) -> Vec<f64> {
    mean.iter().map(|m| m.tanh()).collect()
}

/// Log density of a given pre-squash value under the head, used by the
/// density-estimate tests.
pub fn log_prob_of(mean: f64, log_std_raw: f64, action: f64) -> f64 {
    let ls = log_std_raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
    let sigma = ls.exp();
    let u = atanh(action);
    let e = (u - mean) / sigma;
    -ls - HALF_LOG_TAU - 0.5 * e * e - (1.0 - action * action + SQUASH_EPS).ln()
}

fn atanh(x: f64) -> f64 {
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}
