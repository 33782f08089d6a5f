//! Soft actor-critic with twin critics, Polyak targets and a fixed
//! entropy coefficient.

use super::replay::ReplayBuffer;
use super::AgentError;
use crate::learner::{
    sample_action, squash_mean, AdamState, BackwardScratch, ForwardTrace, LearnError, Mlp,
    MlpGradients, LOG_STD_MAX, LOG_STD_MIN,
};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Training hyperparameters. The defaults follow the selected grid-search
/// values: learning rate 1e-3, discount 0.92, target smoothing 0.002,
/// entropy coefficient 0.2, batch size 256.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub discount: f64,
    pub tau: f64,
    pub entropy_coef: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub warmup_steps: usize,
    /// Environment steps per gradient update.
    pub update_every: usize,
    pub grad_clip: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            lr: 1e-3,
            discount: 0.92,
            tau: 0.002,
            entropy_coef: 0.2,
            batch_size: 256,
            replay_capacity: 100_000,
            warmup_steps: 1_000,
            update_every: 1,
            grad_clip: 10.0,
        }
    }
}

/// Diagnostic losses of one update.
#[derive(Debug, Clone, Copy)]
pub struct SacLosses {
    pub critic1: f64,
    pub critic2: f64,
    pub actor: f64,
}

impl SacLosses {
    pub fn all_finite(&self) -> bool {
        self.critic1.is_finite() && self.critic2.is_finite() && self.actor.is_finite()
    }
}

/// The full learner state: actor, twin critics and their targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sac {
    pub obs_dim: usize,
    pub action_dim: usize,
    actor: Mlp,
    critic1: Mlp,
    critic2: Mlp,
    target1: Mlp,
    target2: Mlp,
    actor_opt: AdamState,
    critic1_opt: AdamState,
    critic2_opt: AdamState,
    pub cfg: SacConfig,
}

impl Sac {
    pub fn new(obs_dim: usize, action_dim: usize, cfg: &SacConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(&cfg.hidden);
        actor_sizes.push(2 * action_dim);
        let mut critic_sizes = vec![obs_dim + action_dim];
        critic_sizes.extend_from_slice(&cfg.hidden);
        critic_sizes.push(1);

        let actor = Mlp::new(&actor_sizes, rng);
        let critic1 = Mlp::new(&critic_sizes, rng);
        let critic2 = Mlp::new(&critic_sizes, rng);
        let target1 = critic1.clone();
        let target2 = critic2.clone();
        let lr = cfg.lr;
        Self {
            obs_dim,
            action_dim,
            actor_opt: AdamState::new(&actor, lr),
            critic1_opt: AdamState::new(&critic1, lr),
            critic2_opt: AdamState::new(&critic2, lr),
            actor,
            critic1,
            critic2,
            target1,
            target2,
            cfg: cfg.clone(),
        }
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    /// Stochastic action in `(-1,1)^d` with its log probability.
    pub fn sample_raw(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64), LearnError> {
        let out = self.actor.forward(obs)?;
        let (mean, log_std) = out.split_at(self.action_dim);
        let s = sample_action(mean, log_std, rng);
        Ok((s.action, s.log_prob))
    }

    /// Deterministic evaluation action (squashed mean).
    pub fn mean_raw(&self, obs: &[f64]) -> Result<Vec<f64>, LearnError> {
        let out = self.actor.forward(obs)?;
        Ok(squash_mean(&out[..self.action_dim]))
    }

    /// One gradient update on a uniform batch from the replay buffer.
    pub fn update(&mut self, replay: &ReplayBuffer, rng: &mut ChaCha8Rng) -> Result<SacLosses, AgentError> {
        let batch = replay.sample_indices(self.cfg.batch_size, rng);
        let b = batch.len() as f64;
        let alpha = self.cfg.entropy_coef;
        let gamma = self.cfg.discount;

        let mut grads_c1 = MlpGradients::zeros_like(&self.critic1);
        let mut grads_c2 = MlpGradients::zeros_like(&self.critic2);
        let mut grads_actor = MlpGradients::zeros_like(&self.actor);
        let mut loss_c1 = 0.0;
        let mut loss_c2 = 0.0;
        let mut loss_actor = 0.0;

        // buffers shared across the batch
        let mut scratch = BackwardScratch::default();
        let mut trace = ForwardTrace::default();
        let mut actor_trace = ForwardTrace::default();
        let mut t1 = ForwardTrace::default();
        let mut t2 = ForwardTrace::default();
        let mut joined: Vec<f64> = Vec::new();
        let mut dq_din: Vec<f64> = Vec::new();
        let mut out_grad = vec![0.0; 2 * self.action_dim];

        for &idx in &batch {
            let tr = replay.get(idx);

            // --- critic targets from the frozen networks
            self.actor.forward_trace_into(&tr.next_obs, &mut trace)?;
            let (next_mean, next_log_std) = trace.output().split_at(self.action_dim);
            let next_sample = sample_action(next_mean, next_log_std, rng);
            joined.clear();
            joined.extend_from_slice(&tr.next_obs);
            joined.extend_from_slice(&next_sample.action);
            self.target1.forward_trace_into(&joined, &mut t1)?;
            self.target2.forward_trace_into(&joined, &mut t2)?;
            let (tq1, tq2) = (t1.output()[0], t2.output()[0]);
            let y = tr.reward
                + gamma * tr.done.bootstrap_mask() * (tq1.min(tq2) - alpha * next_sample.log_prob);

            // --- twin critic regression toward y
            joined.clear();
            joined.extend_from_slice(&tr.obs);
            joined.extend_from_slice(&tr.action);
            for (critic, grads, loss) in [
                (&self.critic1, &mut grads_c1, &mut loss_c1),
                (&self.critic2, &mut grads_c2, &mut loss_c2),
            ] {
                critic.forward_trace_into(&joined, &mut trace)?;
                let err = trace.output()[0] - y;
                *loss += err * err / b;
                critic.backward_into(&trace, &[2.0 * err / b], Some(grads), None, &mut scratch)?;
            }

            // --- actor: minimize alpha*log pi - min Q(s, a(theta))
            self.actor.forward_trace_into(&tr.obs, &mut actor_trace)?;
            let (mean, log_std_raw) = actor_trace.output().split_at(self.action_dim);
            let pi = sample_action(mean, log_std_raw, rng);
            let log_std_raw = log_std_raw.to_vec();

            joined.clear();
            joined.extend_from_slice(&tr.obs);
            joined.extend_from_slice(&pi.action);
            self.critic1.forward_trace_into(&joined, &mut t1)?;
            self.critic2.forward_trace_into(&joined, &mut t2)?;
            let (q1, q2) = (t1.output()[0], t2.output()[0]);
            let (q_min, min_trace, min_critic) =
                if q1 <= q2 { (q1, &t1, &self.critic1) } else { (q2, &t2, &self.critic2) };
            loss_actor += (alpha * pi.log_prob - q_min) / b;

            min_critic.backward_into(min_trace, &[1.0], None, Some(&mut dq_din), &mut scratch)?;
            let dq_da = &dq_din[self.obs_dim..];

            for d in 0..self.action_dim {
                let a = pi.action[d];
                let tanh_d = 1.0 - a * a;
                let sigma = pi.log_std[d].exp();
                let dlogp_da = 2.0 * a / (1.0 - a * a + crate::learner::SQUASH_EPS);
                let common = alpha * dlogp_da - dq_da[d];
                out_grad[d] = common * tanh_d / b;
                let pass = if log_std_raw[d] > LOG_STD_MIN && log_std_raw[d] < LOG_STD_MAX {
                    1.0
                } else {
                    0.0
                };
                out_grad[self.action_dim + d] =
                    pass * (-alpha + common * tanh_d * sigma * pi.eps[d]) / b;
            }
            self.actor.backward_into(&actor_trace, &out_grad, Some(&mut grads_actor), None, &mut scratch)?;
        }

        grads_c1.clip_global_norm(self.cfg.grad_clip);
        grads_c2.clip_global_norm(self.cfg.grad_clip);
        grads_actor.clip_global_norm(self.cfg.grad_clip);
        self.critic1_opt.apply(&mut self.critic1, &grads_c1)?;
        self.critic2_opt.apply(&mut self.critic2, &grads_c2)?;
        self.actor_opt.apply(&mut self.actor, &grads_actor)?;
        self.polyak_update(self.cfg.tau);

        Ok(SacLosses { critic1: loss_c1, critic2: loss_c2, actor: loss_actor })
    }

    /// Target smoothing: `target <- tau*online + (1-tau)*target`.
    pub fn polyak_update(&mut self, tau: f64) {
        for (online, target) in
            [(&self.critic1, &mut self.target1), (&self.critic2, &mut self.target2)]
        {
            for (ol, tl) in online.layers().iter().zip(target.layers_mut()) {
                for (o, t) in ol.weights.iter().zip(tl.weights.iter_mut()) {
                    *t = tau * o + (1.0 - tau) * *t;
                }
                for (o, t) in ol.biases.iter().zip(tl.biases.iter_mut()) {
                    *t = tau * o + (1.0 - tau) * *t;
                }
            }
        }
    }

    pub fn targets_match_online(&self) -> bool {
        let eq = |a: &Mlp, b: &Mlp| {
            a.layers()
                .iter()
                .zip(b.layers())
                .all(|(x, y)| x.weights == y.weights && x.biases == y.biases)
        };
        eq(&self.critic1, &self.target1) && eq(&self.critic2, &self.target2)
    }

    pub fn all_params_finite(&self) -> bool {
        self.actor.all_params_finite()
            && self.critic1.all_params_finite()
            && self.critic2.all_params_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::replay::{Done, Transition};
    use rand::Rng;
    use rand::SeedableRng;

    fn tiny_cfg() -> SacConfig {
        SacConfig {
            hidden: vec![8, 8],
            batch_size: 16,
            replay_capacity: 256,
            warmup_steps: 0,
            ..SacConfig::default()
        }
    }

    fn random_transition(obs_dim: usize, action_dim: usize, rng: &mut ChaCha8Rng) -> Transition {
        Transition {
            obs: (0..obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            action: (0..action_dim).map(|_| rng.gen_range(-0.99..0.99)).collect(),
            reward: rng.gen_range(-1.0..1.0),
            next_obs: (0..obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            done: if rng.gen_bool(0.1) { Done::Terminal } else { Done::Not },
        }
    }

    #[test]
    fn polyak_with_tau_one_copies_online() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sac = Sac::new(5, 3, &tiny_cfg(), &mut rng);
        // desynchronize targets with a few updates first
        let mut replay = ReplayBuffer::new(64);
        for _ in 0..32 {
            replay.push(random_transition(5, 3, &mut rng));
        }
        sac.update(&replay, &mut rng).unwrap();
        assert!(!sac.targets_match_online());
        sac.polyak_update(1.0);
        assert!(sac.targets_match_online());
    }

    #[test]
    fn updates_are_deterministic() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut sac = Sac::new(4, 2, &tiny_cfg(), &mut rng);
            let mut replay = ReplayBuffer::new(128);
            for _ in 0..64 {
                replay.push(random_transition(4, 2, &mut rng));
            }
            for _ in 0..10 {
                sac.update(&replay, &mut rng).unwrap();
            }
            sac.actor().layers()[0].weights.clone()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn losses_stay_finite_over_many_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sac = Sac::new(6, 3, &tiny_cfg(), &mut rng);
        let mut replay = ReplayBuffer::new(512);
        for _ in 0..256 {
            replay.push(random_transition(6, 3, &mut rng));
        }
        for _ in 0..200 {
            let losses = sac.update(&replay, &mut rng).unwrap();
            assert!(losses.all_finite());
        }
        assert!(sac.all_params_finite());
    }

    /// Finite-difference check of the actor gradient: freeze the noise and
    /// the critics, perturb each actor parameter, and compare the loss
    /// slope with the assembled analytic gradient.
    #[test]
    fn actor_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = SacConfig { hidden: vec![6], ..tiny_cfg() };
        let sac = Sac::new(3, 2, &cfg, &mut rng);
        let obs: Vec<f64> = vec![0.3, -0.2, 0.7];
        let eps: Vec<f64> = vec![0.41, -1.2];
        let alpha = cfg.entropy_coef;

        // loss(actor) with frozen eps: alpha*logp - min_q, all manual
        let loss_of = |actor: &Mlp| -> f64 {
            let out = actor.forward(&obs).unwrap();
            let (mean, ls_raw) = out.split_at(2);
            let mut logp = 0.0;
            let mut action = [0.0; 2];
            for d in 0..2 {
                let ls = ls_raw[d].clamp(LOG_STD_MIN, LOG_STD_MAX);
                let sigma = ls.exp();
                let u = mean[d] + sigma * eps[d];
                let a = u.tanh();
                action[d] = a;
                logp += -ls - 0.918_938_533_204_672_7 - 0.5 * eps[d] * eps[d];
                logp -= (1.0 - a * a + crate::learner::SQUASH_EPS).ln();
            }
            let mut q_in = obs.clone();
            q_in.extend_from_slice(&action);
            let q1 = sac.critic1.forward(&q_in).unwrap()[0];
            let q2 = sac.critic2.forward(&q_in).unwrap()[0];
            alpha * logp - q1.min(q2)
        };

        // analytic gradient assembled the same way update() does it
        let actor_trace = sac.actor.forward_trace(&obs).unwrap();
        let out = actor_trace.activations.last().unwrap().clone();
        let (mean, ls_raw) = out.split_at(2);
        let mut action = [0.0; 2];
        let mut sigmas = [0.0; 2];
        for d in 0..2 {
            let ls = ls_raw[d].clamp(LOG_STD_MIN, LOG_STD_MAX);
            sigmas[d] = ls.exp();
            action[d] = (mean[d] + sigmas[d] * eps[d]).tanh();
        }
        let mut q_in = obs.clone();
        q_in.extend_from_slice(&action);
        let t1 = sac.critic1.forward_trace(&q_in).unwrap();
        let t2 = sac.critic2.forward_trace(&q_in).unwrap();
        let q1 = t1.activations.last().unwrap()[0];
        let q2 = t2.activations.last().unwrap()[0];
        let (min_trace, min_critic) =
            if q1 <= q2 { (&t1, &sac.critic1) } else { (&t2, &sac.critic2) };
        let (_, dq_din) = min_critic.backward(min_trace, &[1.0]).unwrap();
        let dq_da = &dq_din[3..];
        let mut out_grad = vec![0.0; 4];
        for d in 0..2 {
            let a = action[d];
            let tanh_d = 1.0 - a * a;
            let dlogp_da = 2.0 * a / (1.0 - a * a + crate::learner::SQUASH_EPS);
            let common = alpha * dlogp_da - dq_da[d];
            out_grad[d] = common * tanh_d;
            let pass =
                if ls_raw[d] > LOG_STD_MIN && ls_raw[d] < LOG_STD_MAX { 1.0 } else { 0.0 };
            out_grad[2 + d] = pass * (-alpha + common * tanh_d * sigmas[d] * eps[d]);
        }
        let (grads, _) = sac.actor.backward(&actor_trace, &out_grad).unwrap();

        let mut actor = sac.actor.clone();
        let h = 1e-6;
        for li in 0..actor.layers().len() {
            for wi in 0..actor.layers()[li].weights.len() {
                let orig = actor.layers()[li].weights[wi];
                actor.layers_mut()[li].weights[wi] = orig + h;
                let up = loss_of(&actor);
                actor.layers_mut()[li].weights[wi] = orig - h;
                let down = loss_of(&actor);
                actor.layers_mut()[li].weights[wi] = orig;
                let fd = (up - down) / (2.0 * h);
                let an = grads.layers[li].weights[wi];
                let denom = fd.abs().max(an.abs()).max(1e-6);
                assert!(
                    (fd - an).abs() / denom < 1e-3,
                    "layer {li} w{wi}: fd {fd:.8} vs analytic {an:.8}"
                );
            }
        }
    }
}
