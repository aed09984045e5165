//! Adam with decoupled weight decay.

use crate::params::ParamStore;

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-6,
        }
    }
}

/// One optimizer step over every parameter, consuming the accumulated
/// gradients (they are left in place; call `zero_grad` afterwards).
pub fn adam_step(store: &mut ParamStore, cfg: &AdamConfig) {
    store.step += 1;
    let t = store.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for e in &mut store.entries {
        for k in 0..e.data.len() {
            let g = e.grad[k];
            e.m[k] = cfg.beta1 * e.m[k] + (1.0 - cfg.beta1) * g;
            e.v[k] = cfg.beta2 * e.v[k] + (1.0 - cfg.beta2) * g * g;
            let m_hat = e.m[k] / bc1;
            let v_hat = e.v[k] / bc2;
            e.data[k] -= cfg.lr * cfg.weight_decay * e.data[k];
            e.data[k] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::Tape;

    #[test]
    fn zero_grads_zero_decay_leave_params_unchanged() {
        let mut store = ParamStore::new();
        let id = store.register("w", 1, 2, vec![1.5, -0.5]);
        let cfg = AdamConfig { weight_decay: 0.0, ..AdamConfig::default() };
        adam_step(&mut store, &cfg);
        assert_eq!(store.data(id), &[1.5, -0.5]);
    }

    #[test]
    fn defaults_match_training_setup() {
        let cfg = AdamConfig::default();
        assert_eq!(cfg.lr, 1e-4);
        assert_eq!(cfg.weight_decay, 1e-6);
    }

    #[test]
    fn scalar_quadratic_descends_to_zero() {
        let mut store = ParamStore::new();
        let id = store.register("w", 1, 1, vec![2.0]);
        let cfg = AdamConfig { lr: 1e-2, weight_decay: 0.0, ..AdamConfig::default() };
        for _ in 0..10_000 {
            store.zero_grad();
            let tape = Tape::new();
            let w = tape.param(&store, id).unwrap();
            let loss = w.mul(&w).unwrap().sum_all().unwrap();
            tape.backward(&loss, &mut store).unwrap();
            adam_step(&mut store, &cfg);
        }
        assert!(store.data(id)[0].abs() < 1e-3, "w = {}", store.data(id)[0]);
    }
}
