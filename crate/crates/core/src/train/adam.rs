use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::nn::{GraphNetModel, Gradients};
use crate::real::{powi, sqrt, Real};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptimizerError {
    #[error("optimizer state does not match the parameter layout")]
    Shape,
    #[error("invalid optimizer configuration: {0}")]
    Config(&'static str),
}

/// Adam hyperparameters with a staircase learning-rate decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub base_lr: Real,
    pub beta1: Real,
    pub beta2: Real,
    pub eps: Real,
    pub decay_rate: Real,
    pub decay_every: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { base_lr: 0.001, beta1: 0.9, beta2: 0.999, eps: 1e-8, decay_rate: 0.7, decay_every: 20 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if !(self.base_lr > 0.0) {
            return Err(OptimizerError::Config("base_lr must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(OptimizerError::Config("betas must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) || !(self.decay_rate > 0.0) {
            return Err(OptimizerError::Config("eps and decay_rate must be positive"));
        }
        if self.decay_every == 0 {
            return Err(OptimizerError::Config("decay_every must be at least 1"));
        }
        Ok(())
    }

    /// `base_lr · decay_rate^floor(epoch / decay_every)`, epochs counted from 0.
    pub fn lr_at(&self, epoch: usize) -> Real {
        self.base_lr * powi(self.decay_rate, (epoch / self.decay_every) as i32)
    }
}

/// First and second moments shaped like the parameters, plus the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    m: Vec<Vec<Real>>,
    v: Vec<Vec<Real>>,
    step: u64,
}

impl OptimizerState {
    pub fn new(config: AdamConfig, model: &GraphNetModel) -> Self {
        let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
        Self::with_shapes(config, &shapes)
    }

    pub fn with_shapes(config: AdamConfig, lens: &[usize]) -> Self {
        Self {
            config,
            m: lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: lens.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Vec<Real>], &[Vec<Real>]) {
        (&self.m, &self.v)
    }

    /// One bias-corrected Adam update at learning rate `lr`.
    ///
    /// A coordinate whose gradient is exactly zero keeps its value; its
    /// moments still decay.
    pub fn step_tensors(&mut self, params: &mut [&mut [Real]], grads: &[&[Real]], lr: Real) -> Result<(), OptimizerError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(OptimizerError::Shape);
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(OptimizerError::Shape);
            }
        }
        self.step += 1;
        let c = &self.config;
        let t = self.step.min(i32::MAX as u64) as i32;
        let bc1 = 1.0 - powi(c.beta1, t);
        let bc2 = 1.0 - powi(c.beta2, t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
                if gi == 0.0 {
                    continue;
                }
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (sqrt(v_hat) + c.eps);
            }
        }
        Ok(())
    }

    pub fn step(&mut self, model: &mut GraphNetModel, grads: &Gradients, lr: Real) -> Result<(), OptimizerError> {
        let g = grads.tensors();
        let mut p = model.tensors_mut();
        self.step_tensors(&mut p, &g, lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule() {
        let c = AdamConfig::default();
        assert_eq!(c.lr_at(0), 0.001);
        assert_eq!(c.lr_at(19), 0.001);
        assert!((c.lr_at(40) - 0.00049).abs() < 1e-15);
    }

    #[test]
    fn one_step_scalar() {
        let mut s = OptimizerState::with_shapes(AdamConfig::default(), &[1]);
        let mut p = [0.5];
        s.step_tensors(&mut [&mut p[..]], &[&[1.0][..]], 0.001).unwrap();
        let expected = 0.5 - 0.001 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut s = OptimizerState::with_shapes(AdamConfig::default(), &[2]);
        let mut p = [0.5, -0.25];
        s.step_tensors(&mut [&mut p[..]], &[&[1.0, 2.0][..]], 0.001).unwrap();
        let before = p;
        let m_before = s.moments().0[0].clone();
        s.step_tensors(&mut [&mut p[..]], &[&[0.0, 0.0][..]], 0.001).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.moments().0[0][0], 0.9 * m_before[0]);
        assert!(s.step_tensors(&mut [&mut p[..]], &[&[0.0][..]], 0.001).is_err());
    }
}
