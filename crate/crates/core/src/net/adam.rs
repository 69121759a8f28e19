use serde::{Deserialize, Serialize};

use super::config::TrainConfig;

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &TrainConfig) {
    assert_eq!(params.len(), grads.len(), "gradient length");
    assert_eq!(params.len(), state.m.len(), "optimizer state length");
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_null_update() {
        let cfg = TrainConfig::default();
        let mut p = vec![1.0, -2.0, 3.5];
        let mut s = AdamState::new(3);
        for _ in 0..5 {
            adam_step(&mut p, &[0.0; 3], &mut s, &cfg);
        }
        assert_eq!(p, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_sign() {
        let cfg = TrainConfig::default();
        let g = [0.3, -7.0, 1e-3, -0.02];
        let mut p = vec![0.0; 4];
        let mut s = AdamState::new(4);
        adam_step(&mut p, &g, &mut s, &cfg);
        for (pi, gi) in p.iter().zip(g) {
            // m_hat = g, v_hat = g^2, so the step is lr * |g| / (|g| + eps)
            let expect = -cfg.learning_rate * gi / (gi.abs() + cfg.epsilon);
            assert!((pi - expect).abs() < 1e-18);
            assert!((pi.abs() - cfg.learning_rate).abs() < 1e-8);
        }
    }

    #[test]
    fn quadratic_bowl_descends() {
        let cfg = TrainConfig {
            learning_rate: 0.005,
            ..TrainConfig::default()
        };
        let scale: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        let mut p: Vec<f64> = (0..10).map(|i| 2.0 + 0.1 * i as f64).collect();
        let mut s = AdamState::new(10);
        let f = |p: &[f64]| p.iter().zip(&scale).map(|(x, a)| a * x * x).sum::<f64>();
        let mut prev = f(&p);
        let start = prev;
        for step in 0..200 {
            let g: Vec<f64> = p.iter().zip(&scale).map(|(x, a)| 2.0 * a * x).collect();
            adam_step(&mut p, &g, &mut s, &cfg);
            let now = f(&p);
            if step >= 5 {
                assert!(now < prev, "step {step}: {now} >= {prev}");
            }
            prev = now;
        }
        assert!(prev < 0.5 * start, "{prev} vs {start}");
    }
}
