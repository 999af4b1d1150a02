//! Named parameter storage.
//!
//! Parameters are ordinary tensors with `requires_grad` set, held in a
//! deterministic insertion order so optimizer sweeps, checkpoints and
//! re-runs all see the same sequence.

use super::scalar::Scalar;
use super::tape::{NodeId, Tape};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn from_index(index: usize) -> Self {
        ParamId(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct ParamStore<T: Scalar> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: &str, mut tensor: Tensor<T>) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::Contract(format!("duplicate parameter `{name}`")));
        }
        tensor.requires_grad = true;
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        self.index.insert(name.to_string(), self.tensors.len() - 1);
        Ok(ParamId(self.tensors.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.0]
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter())
    }

    pub fn total_params(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn zero_grads(&mut self) {
        for t in &mut self.tensors {
            t.zero_grad();
        }
    }

    /// Register every parameter as a tape leaf, in store order.
    pub fn bind(&self, tape: &mut Tape<T>) -> Binding {
        let ids = self.tensors.iter().map(|t| tape.leaf(t.clone())).collect();
        Binding { ids }
    }

    /// Accumulate the tape's leaf gradients back into parameter buffers.
    pub fn write_grads(&mut self, tape: &Tape<T>, binding: &Binding) -> Result<()> {
        for (idx, node) in binding.ids.iter().enumerate() {
            if let Some(g) = tape.grad(*node) {
                self.tensors[idx].accumulate_grad(g)?;
            }
        }
        Ok(())
    }

    pub fn map_precision<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::map_precision).collect(),
            index: self.index.clone(),
        }
    }
}

/// Tape leaf ids for one forward pass, aligned with store order.
pub struct Binding {
    ids: Vec<NodeId>,
}

impl Binding {
    pub fn node(&self, id: ParamId) -> NodeId {
        self.ids[id.0]
    }
}
