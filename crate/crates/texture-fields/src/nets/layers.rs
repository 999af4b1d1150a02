//! Fully-connected building blocks on the autodiff tape.

use crate::autodiff::{Binding, NodeId, ParamId, ParamStore, Scalar, Tape, Tensor};
use crate::error::Result;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Kaiming-uniform fan-in: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
    KaimingUniform,
    Zero,
}

fn init_weights<T: Scalar>(
    rng: &mut ChaCha12Rng,
    rows: usize,
    cols: usize,
    init: Init,
) -> Tensor<T> {
    let mut data = Vec::with_capacity(rows * cols);
    match init {
        Init::Zero => data.resize(rows * cols, T::ZERO),
        Init::KaimingUniform => {
            // fan_in = rows (weights are stored input-major: [in, out])
            let bound = if rows == 0 {
                0.0
            } else {
                (6.0 / rows as f64).sqrt()
            };
            for _ in 0..rows * cols {
                let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                data.push(T::from_f64(u * bound));
            }
        }
    }
    Tensor::from_vec(vec![rows, cols], data).expect("init shape is consistent")
}

/// A linear layer `x W + b`, weights `[in, out]` row-major, bias optional.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut ChaCha12Rng,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        init: Init,
    ) -> Result<Self> {
        let w = store.add(&format!("{name}.w"), init_weights(rng, in_dim, out_dim, init))?;
        let b = store.add(&format!("{name}.b"), Tensor::zeros(vec![out_dim]))?;
        Ok(Self {
            w,
            b: Some(b),
            in_dim,
            out_dim,
        })
    }

    /// Bias-free variant, used for residual shortcuts.
    pub fn new_no_bias<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut ChaCha12Rng,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        init: Init,
    ) -> Result<Self> {
        let w = store.add(&format!("{name}.w"), init_weights(rng, in_dim, out_dim, init))?;
        Ok(Self {
            w,
            b: None,
            in_dim,
            out_dim,
        })
    }

    pub fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        binding: &Binding,
        x: NodeId,
    ) -> Result<NodeId> {
        match self.b {
            Some(b) => tape.affine(x, binding.node(self.w), binding.node(b)),
            None => tape.matmul(x, binding.node(self.w)),
        }
    }
}

/// Pre-activation residual block: x + fc1(relu(fc0(relu(x)))), with a
/// linear shortcut when input and output widths differ.
#[derive(Debug, Clone)]
pub struct ResBlock {
    pub fc0: Linear,
    pub fc1: Linear,
    pub shortcut: Option<Linear>,
}

impl ResBlock {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut ChaCha12Rng,
        name: &str,
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
    ) -> Result<Self> {
        let fc0 = Linear::new(store, rng, &format!("{name}.fc0"), in_dim, hidden, Init::KaimingUniform)?;
        let fc1 = Linear::new(store, rng, &format!("{name}.fc1"), hidden, out_dim, Init::KaimingUniform)?;
        let shortcut = if in_dim != out_dim {
            Some(Linear::new_no_bias(
                store,
                rng,
                &format!("{name}.skip"),
                in_dim,
                out_dim,
                Init::KaimingUniform,
            )?)
        } else {
            None
        };
        Ok(Self { fc0, fc1, shortcut })
    }

    pub fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        binding: &Binding,
        x: NodeId,
    ) -> Result<NodeId> {
        let a = tape.relu(x);
        let a = self.fc0.forward(tape, binding, a)?;
        let a = tape.relu(a);
        let a = self.fc1.forward(tape, binding, a)?;
        let skip = match &self.shortcut {
            Some(s) => s.forward(tape, binding, x)?,
            None => x,
        };
        tape.add(skip, a)
    }
}
