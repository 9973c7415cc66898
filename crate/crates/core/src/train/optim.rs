use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::tensor::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction, keeping moments per parameter entry.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .iter()
            .map(|p| alloc::vec![0.0; p.value.numel()])
            .collect();
        Adam {
            cfg,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Applies one update; `grads[i]` is `None` for entries without gradient.
    pub fn step(&mut self, params: &mut ModelParams, grads: &[Option<&[f64]>]) {
        self.step += 1;
        let c = self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.step);
        let bc2 = 1.0 - c.beta2.powi(self.step);
        for (i, g) in grads.iter().enumerate() {
            let (Some(g), true) = (g, params.entry(i).trainable) else {
                continue;
            };
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            let w = params.entry_mut(i).value.data_mut();
            for j in 0..w.len() {
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
                w[j] -= c.lr * (m[j] / bc1) / ((v[j] / bc2).sqrt() + c.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = ModelParams::new();
        p.insert(
            "w",
            Tensor::new(alloc::vec![2], alloc::vec![1.0, -1.0]).unwrap(),
            true,
        );
        p.insert("buf", Tensor::zeros(&[1]), false);
        let mut adam = Adam::new(AdamConfig::default(), &p);
        let g = [3.0, -0.5];
        adam.step(&mut p, &[Some(&g), Some(&[1.0])]);
        let w = p.get("w").unwrap().data();
        assert!((w[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((w[1] - (-1.0 + 1e-3)).abs() < 1e-9);
        assert_eq!(p.get("buf").unwrap().data(), &[0.0]);
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut p = ModelParams::new();
        p.insert("x", Tensor::scalar(5.0), true);
        let mut adam = Adam::new(
            AdamConfig {
                lr: 0.1,
                ..Default::default()
            },
            &p,
        );
        for _ in 0..500 {
            let g = [2.0 * (p.get("x").unwrap().data()[0] - 2.0)];
            adam.step(&mut p, &[Some(&g)]);
        }
        assert!((p.get("x").unwrap().data()[0] - 2.0).abs() < 1e-3);
    }
}
