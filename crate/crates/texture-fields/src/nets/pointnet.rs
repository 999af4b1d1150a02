//! Permutation-invariant point-cloud encoder.
//!
//! Per-point features pass through five residual blocks; between blocks the
//! running global max is concatenated back onto each point, and the final
//! pooled vector is projected to the shape embedding. Max pooling makes the
//! embedding exactly invariant to point order.

use super::layers::{Init, Linear, ResBlock};
use crate::autodiff::{Binding, NodeId, ParamStore, Scalar, Tape};
use crate::error::{Error, Result};
use rand_chacha::ChaCha12Rng;

pub const POINTNET_BLOCKS: usize = 5;

#[derive(Debug, Clone)]
pub struct PointNetEncoder {
    pub fc_in: Linear,
    pub blocks: Vec<ResBlock>,
    pub fc_out: Linear,
}

impl PointNetEncoder {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut ChaCha12Rng,
        hidden: usize,
        s_dim: usize,
    ) -> Result<Self> {
        let fc_in = Linear::new(store, rng, "shape.fc_in", 3, 2 * hidden, Init::KaimingUniform)?;
        let mut blocks = Vec::with_capacity(POINTNET_BLOCKS);
        for i in 0..POINTNET_BLOCKS {
            blocks.push(ResBlock::new(
                store,
                rng,
                &format!("shape.block{i}"),
                2 * hidden,
                hidden,
                hidden,
            )?);
        }
        let fc_out = Linear::new(store, rng, "shape.fc_out", hidden, s_dim, Init::KaimingUniform)?;
        Ok(Self {
            fc_in,
            blocks,
            fc_out,
        })
    }

    /// `points` is [N,3], N >= 1. Returns a [1, s_dim] embedding.
    pub fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        binding: &Binding,
        points: NodeId,
    ) -> Result<NodeId> {
        let (n, coords) = tape.value(points).dims2()?;
        if n == 0 || coords != 3 {
            return Err(Error::Contract(format!(
                "shape encoder expects non-empty [N,3] cloud, got {:?}",
                tape.shape(points)
            )));
        }
        let mut net = self.fc_in.forward(tape, binding, points)?;
        for (i, block) in self.blocks.iter().enumerate() {
            net = block.forward(tape, binding, net)?;
            if i + 1 < self.blocks.len() {
                let pooled = tape.max_axis(net, 0)?;
                let tiled = tape.repeat_rows(pooled, n)?;
                net = tape.concat_cols(net, tiled)?;
            }
        }
        let pooled = tape.max_axis(net, 0)?;
        let active = tape.relu(pooled);
        self.fc_out.forward(tape, binding, active)
    }
}
