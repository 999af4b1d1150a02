//! Adam with bias correction.

use super::params::ParamStore;
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    pub step: u64,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    /// Defaults follow the original formulation: beta1 0.9, beta2 0.999,
    /// eps 1e-8. The learning rate is the caller's.
    pub fn new(store: &ParamStore<T>, lr: T) -> Self {
        Self {
            step: 0,
            lr,
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            eps: T::from_f64(1e-8),
            m: store.iter().map(|(_, t)| vec![T::ZERO; t.numel()]).collect(),
            v: store.iter().map(|(_, t)| vec![T::ZERO; t.numel()]).collect(),
        }
    }

    pub fn moments(&self) -> (&[Vec<T>], &[Vec<T>]) {
        (&self.m, &self.v)
    }

    pub(crate) fn restore_moments(&mut self, m: Vec<Vec<T>>, v: Vec<Vec<T>>) {
        self.m = m;
        self.v = v;
    }

    /// One update over every parameter. Gradients must be populated and
    /// finite; they are left in place for the caller to zero.
    pub fn step(&mut self, store: &mut ParamStore<T>) -> Result<()> {
        if self.m.len() != store.len() {
            return Err(Error::Contract(format!(
                "optimizer tracks {} parameters, store has {}",
                self.m.len(),
                store.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::ONE - self.beta1.powi(t);
        let bc2 = T::ONE - self.beta2.powi(t);
        let (b1, b2) = (self.beta1, self.beta2);
        let (lr, eps) = (self.lr, self.eps);
        for idx in 0..store.len() {
            let id = super::params::ParamId(idx);
            let name = store.name(id).to_string();
            let tensor = store.get_mut(id);
            let numel = tensor.numel();
            {
                let grad = tensor
                    .grad()
                    .ok_or_else(|| Error::Contract(format!("parameter `{name}` has no gradient")))?;
                if grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::NonFinite(format!("gradient of parameter `{name}`")));
                }
                let m = &mut self.m[idx];
                let v = &mut self.v[idx];
                debug_assert_eq!(m.len(), numel);
                for i in 0..numel {
                    let g = grad[i];
                    m[i] = b1 * m[i] + (T::ONE - b1) * g;
                    v[i] = b2 * v[i] + (T::ONE - b2) * g * g;
                }
            }
            let m = &self.m[idx];
            let v = &self.v[idx];
            let data = tensor.data_mut();
            for i in 0..numel {
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                data[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
