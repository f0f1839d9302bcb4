//! Adam optimizer over a flat parameter vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(cfg: AdamConfig, param_count: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&cfg.beta1) || !(0.0..1.0).contains(&cfg.beta2) {
            return Err(Error::Config(format!(
                "adam betas must lie in [0, 1), got {} and {}",
                cfg.beta1, cfg.beta2
            )));
        }
        if cfg.learning_rate <= 0.0 || cfg.epsilon <= 0.0 {
            return Err(Error::Config(
                "adam learning rate and epsilon must be positive".into(),
            ));
        }
        Ok(Adam {
            cfg,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        })
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Dimension(format!(
                "adam state holds {} parameters, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let bias1 = 1.0 - b1.powi(self.t as i32);
        let bias2 = 1.0 - b2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= self.cfg.learning_rate * m_hat / (v_hat.sqrt() + self.cfg.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_a_quadratic() {
        let mut adam = Adam::new(
            AdamConfig {
                learning_rate: 0.05,
                ..AdamConfig::default()
            },
            2,
        )
        .unwrap();
        let mut params = vec![3.0, -2.0];
        for _ in 0..600 {
            let grads: Vec<f64> = params.iter().map(|&p| 2.0 * (p - 1.0)).collect();
            adam.step(&mut params, &grads).unwrap();
        }
        assert!((params[0] - 1.0).abs() < 1e-3);
        assert!((params[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(Adam::new(
            AdamConfig {
                beta1: 1.0,
                ..AdamConfig::default()
            },
            1
        )
        .is_err());
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let mut adam = Adam::new(AdamConfig::default(), 3).unwrap();
        let mut params = vec![0.0; 3];
        assert!(adam.step(&mut params, &[0.0; 2]).is_err());
    }
}
