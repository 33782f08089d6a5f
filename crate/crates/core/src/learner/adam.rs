//! Adam parameter updates over [`Mlp`] gradients.

use super::mlp::{Mlp, MlpGradients};
use super::LearnError;
use serde::{Deserialize, Serialize};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// First/second moment accumulators mirroring one network's parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
    pub lr: f64,
}

impl AdamState {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let shapes: Vec<usize> = net
            .layers()
            .iter()
            .flat_map(|l| [l.weights.len(), l.biases.len()])
            .collect();
        Self {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
            lr,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam step with bias correction. Rejects non-finite gradients
    /// without touching the parameters or the step count.
    pub fn apply(&mut self, net: &mut Mlp, grads: &MlpGradients) -> Result<(), LearnError> {
        for l in &grads.layers {
            if l.weights.iter().chain(l.biases.iter()).any(|g| !g.is_finite()) {
                return Err(LearnError::NonFiniteGradient);
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let corr1 = 1.0 - BETA1.powi(t);
        let corr2 = 1.0 - BETA2.powi(t);

        let mut slot = 0;
        for (li, layer) in net.layers_mut().iter_mut().enumerate() {
            for (params, grad) in [
                (&mut layer.weights, &grads.layers[li].weights),
                (&mut layer.biases, &grads.layers[li].biases),
            ] {
                let m = &mut self.m[slot];
                let v = &mut self.v[slot];
                slot += 1;
                for i in 0..params.len() {
                    let g = grad[i];
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
                    let m_hat = m[i] / corr1;
                    let v_hat = v[i] / corr2;
                    params[i] -= self.lr * m_hat / (v_hat.sqrt() + EPS);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Mlp::new(&[2, 3, 1], &mut rng);
        let before = net.clone();
        let mut opt = AdamState::new(&net, 1e-3);
        let grads = MlpGradients::zeros_like(&net);
        opt.apply(&mut net, &grads).unwrap();
        assert_eq!(opt.step_count(), 1);
        for (a, b) in net.layers().iter().zip(before.layers()) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.biases, b.biases);
        }
    }

    #[test]
    fn first_step_magnitude_is_learning_rate() {
        // closed form: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps)
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Mlp::new(&[1, 1], &mut rng);
        let w0 = net.layers()[0].weights[0];
        let mut opt = AdamState::new(&net, 1e-3);
        let mut grads = MlpGradients::zeros_like(&net);
        grads.layers[0].weights[0] = 3.7;
        opt.apply(&mut net, &grads).unwrap();
        let moved = w0 - net.layers()[0].weights[0];
        assert_relative_eq!(moved, 1e-3, epsilon = 1e-8);
    }

    #[test]
    fn rejects_non_finite_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Mlp::new(&[1, 1], &mut rng);
        let mut opt = AdamState::new(&net, 1e-3);
        let mut grads = MlpGradients::zeros_like(&net);
        grads.layers[0].weights[0] = f64::NAN;
        assert!(opt.apply(&mut net, &grads).is_err());
        assert_eq!(opt.step_count(), 0);
    }

    #[test]
    fn deterministic_across_runs() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut net = Mlp::new(&[3, 4, 2], &mut rng);
            let mut opt = AdamState::new(&net, 1e-3);
            for step in 0..50 {
                let trace = net.forward_trace(&[0.1, 0.2, 0.3]).unwrap();
                let (grads, _) = net.backward(&trace, &[1.0, -(step as f64) * 0.01]).unwrap();
                opt.apply(&mut net, &grads).unwrap();
            }
            net.layers()[0].weights.clone()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn parameters_stay_finite_under_clipped_noise() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut net = Mlp::new(&[4, 8, 4], &mut rng);
        let mut opt = AdamState::new(&net, 1e-3);
        for _ in 0..100_000 {
            let mut grads = MlpGradients::zeros_like(&net);
            for l in &mut grads.layers {
                for g in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                    *g = rng.gen_range(-100.0..100.0);
                }
            }
            grads.clip_global_norm(10.0);
            opt.apply(&mut net, &grads).unwrap();
        }
        assert!(net.all_params_finite());
    }
}
