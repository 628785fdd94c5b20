use serde::{Deserialize, Serialize};

use super::tensor::Scalar;
use crate::error::{contract, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators for a list of parameter blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T = f32> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    /// Fresh state (zero moments, `t = 0`) shaped like `params`.
    pub fn new(params: &[&[T]]) -> Self {
        let zeros: Vec<Vec<T>> = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update of `params` in place.
    ///
    /// Non-finite gradients leave both parameters and state untouched and
    /// return [`Error::Divergence`].
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]], cfg: &AdamConfig) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(contract(format!(
                "adam state tracks {} blocks, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, ((p, g), m)) in params.iter().zip(grads).zip(&self.m).enumerate() {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(contract(format!("adam block {i} shape mismatch")));
            }
            if let Some(j) = g.iter().position(|x| !x.is_finite()) {
                return Err(Error::Divergence(format!(
                    "non-finite gradient in block {i} at index {j} (adam step {})",
                    self.t + 1
                )));
            }
        }

        self.t += 1;
        let b1 = T::of(cfg.beta1);
        let b2 = T::of(cfg.beta2);
        let one = T::one();
        let bc1 = T::of(1.0 - cfg.beta1.powi(self.t as i32));
        let bc2 = T::of(1.0 - cfg.beta2.powi(self.t as i32));
        let lr = T::of(cfg.lr);
        let eps = T::of(cfg.eps);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
