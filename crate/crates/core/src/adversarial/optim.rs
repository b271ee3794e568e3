use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Descend,
    Ascend,
}

/// Adam with a step counter per slot, so slots added mid-run get their own
/// bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: Vec<u32>,
}

impl Adam {
    pub fn new(config: AdamConfig, n: usize) -> Self {
        Self {
            config,
            m: vec![0.0; n],
            v: vec![0.0; n],
            steps: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], dir: Direction) -> Result<()> {
        if params.len() != self.len() || grad.len() != self.len() {
            return Err(Error::ParamCount {
                expected: self.len(),
                got: params.len().min(grad.len()),
            });
        }
        if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient component {k} is {}", grad[k])));
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let sign = match dir {
            Direction::Descend => -1.0,
            Direction::Ascend => 1.0,
        };
        for k in 0..params.len() {
            let g = grad[k];
            self.steps[k] += 1;
            let t = self.steps[k] as i32;
            self.m[k] = beta1 * self.m[k] + (1.0 - beta1) * g;
            self.v[k] = beta2 * self.v[k] + (1.0 - beta2) * g * g;
            let m_hat = self.m[k] / (1.0 - beta1.powi(t));
            let v_hat = self.v[k] / (1.0 - beta2.powi(t));
            params[k] += sign * lr * m_hat / (v_hat.sqrt() + eps);
        }
        if let Some(k) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {k} became {}", params[k])));
        }
        Ok(())
    }

    /// New optimizer over a different slot layout; `mapping[new] = Some(old)`
    /// keeps the old slot's state, `None` starts fresh.
    pub fn remap(&self, mapping: &[Option<usize>]) -> Adam {
        let mut out = Adam::new(self.config, mapping.len());
        for (new, old) in mapping.iter().enumerate() {
            if let Some(old) = *old {
                out.m[new] = self.m[old];
                out.v[new] = self.v[old];
                out.steps[new] = self.steps[old];
            }
        }
        out
    }

    pub fn reset_slot(&mut self, k: usize) {
        self.m[k] = 0.0;
        self.v[k] = 0.0;
        self.steps[k] = 0;
    }
}
