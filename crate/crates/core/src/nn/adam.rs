use serde::{Deserialize, Serialize};

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// Descends along `grads`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient size mismatch");
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_lr_times_sign() {
        for g in [3.0, -0.02] {
            let mut a = Adam::new(1, 0.001);
            let mut w = [0.5];
            a.step(&mut w, &[g]);
            let delta = w[0] - 0.5;
            assert!((delta + 0.001 * f64::signum(g)).abs() < 1e-5);
        }
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut a = Adam::new(3, 0.001);
        let mut w = [1.0, -2.0, 3.0];
        for _ in 0..10 {
            a.step(&mut w, &[0.0; 3]);
        }
        assert_eq!(w, [1.0, -2.0, 3.0]);
    }

    #[test]
    fn descends_quadratic() {
        let mut a = Adam::new(1, 0.001);
        let mut w = [1.0];
        for _ in 0..100 {
            let g = 2.0 * w[0];
            a.step(&mut w, &[g]);
        }
        assert!(w[0].abs() < 1.0);
    }
}
