//! Dense row-major tensors.
//!
//! A `Tensor` is a plain value; differentiation happens on a [`Tape`]
//! (see `tape.rs`), which owns its own node values. Tensors carry an
//! optional gradient buffer so parameters can accumulate gradients
//! across backward passes until the optimizer consumes them.
//!
//! [`Tape`]: super::tape::Tape

use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Scalar> {
    shape: Vec<usize>,
    data: Vec<T>,
    pub requires_grad: bool,
    grad: Option<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Contract(format!(
                "tensor shape {shape:?} implies {numel} elements, data has {}",
                data.len()
            )));
        }
        Ok(Self {
            shape,
            data,
            requires_grad: false,
            grad: None,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Self {
            shape,
            data: vec![T::ZERO; numel],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn full(shape: Vec<usize>, value: T) -> Self {
        let numel = shape.iter().product();
        Self {
            shape,
            data: vec![value; numel],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn scalar(value: T) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// View as a matrix: rank-1 tensors are rows, rank-2 as stored.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.len() {
            1 => Ok((1, self.shape[0])),
            2 => Ok((self.shape[0], self.shape[1])),
            _ => Err(Error::Contract(format!(
                "expected rank <= 2 tensor, got shape {:?}",
                self.shape
            ))),
        }
    }

    pub fn grad(&self) -> Option<&[T]> {
        self.grad.as_deref()
    }

    /// Add `delta` into the gradient buffer, allocating zeros on first use.
    pub fn accumulate_grad(&mut self, delta: &[T]) -> Result<()> {
        if delta.len() != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "accumulate_grad",
                lhs: self.shape.clone(),
                rhs: vec![delta.len()],
            });
        }
        let grad = self.grad.get_or_insert_with(|| vec![T::ZERO; delta.len()]);
        for (g, d) in grad.iter_mut().zip(delta) {
            *g += *d;
        }
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.grad = None;
    }

    /// NaN/Inf is a checkable error state, never silent.
    pub fn validate_finite(&self, what: &str) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what.to_string()));
        }
        Ok(())
    }

    pub fn grad_finite(&self, what: &str) -> Result<()> {
        if let Some(g) = &self.grad {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of {what}")));
            }
        }
        Ok(())
    }

    pub fn map_precision<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
            requires_grad: self.requires_grad,
            grad: None,
        }
    }
}
