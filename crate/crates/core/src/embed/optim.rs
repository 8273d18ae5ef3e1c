//! AmsGrad: Adam with a non-decreasing second-moment normalizer.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmsGradConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AmsGradConfig {
    fn default() -> Self {
        AmsGradConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AmsGrad {
    cfg: AmsGradConfig,
    step: i32,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    max_second_moment: Vec<f64>,
}

impl AmsGrad {
    pub fn new(cfg: AmsGradConfig, num_params: usize) -> Self {
        AmsGrad {
            cfg,
            step: 0,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            max_second_moment: vec![0.0; num_params],
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.step as usize
    }

    /// One update in place. Bias correction follows the common
    /// `lr/(1−β₁ᵗ)` and `√v̂/√(1−β₂ᵗ)` form.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len(), "parameter/gradient length mismatch");
        assert_eq!(params.len(), self.first_moment.len(), "optimizer sized for another model");
        self.step += 1;
        let AmsGradConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.cfg;
        let bias1 = 1.0 - beta1.powi(self.step);
        let bias2_sqrt = (1.0 - beta2.powi(self.step)).sqrt();
        let step_size = learning_rate / bias1;
        for i in 0..params.len() {
            let g = grad[i];
            let m = beta1 * self.first_moment[i] + (1.0 - beta1) * g;
            let v = beta2 * self.second_moment[i] + (1.0 - beta2) * g * g;
            let v_max = self.max_second_moment[i].max(v);
            self.first_moment[i] = m;
            self.second_moment[i] = v;
            self.max_second_moment[i] = v_max;
            params[i] -= step_size * m / (v_max.sqrt() / bias2_sqrt + epsilon);
        }
    }
}
