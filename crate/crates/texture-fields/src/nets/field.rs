//! The texture-field network: per-point color from position, shape
//! embedding, and latent code.
//!
//! Structure: a linear lift of the 3D position to the hidden width, then L
//! residual blocks. Before each block, a linear projection of concat(s, z)
//! is broadcast-added to every point's features. A final linear maps to 3
//! channels, squashed by a sigmoid, so all-zero parameters produce
//! mid-gray exactly. Points never mix: every operation is row-local.

use super::layers::{Init, Linear, ResBlock};
use crate::autodiff::{Binding, NodeId, ParamStore, Scalar, Tape};
use crate::error::{Error, Result};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct FieldNet {
    pub lift: Linear,
    pub blocks: Vec<FieldBlock>,
    pub out: Linear,
    pub cond_dim: usize,
}

#[derive(Debug, Clone)]
pub struct FieldBlock {
    pub cond: Linear,
    pub body: ResBlock,
}

impl FieldNet {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut ChaCha12Rng,
        blocks: usize,
        hidden: usize,
        s_dim: usize,
        z_dim: usize,
    ) -> Result<Self> {
        let cond_dim = s_dim + z_dim;
        let lift = Linear::new(store, rng, "field.lift", 3, hidden, Init::KaimingUniform)?;
        let mut field_blocks = Vec::with_capacity(blocks);
        for i in 0..blocks {
            let cond = Linear::new(
                store,
                rng,
                &format!("field.block{i}.cond"),
                cond_dim,
                hidden,
                Init::KaimingUniform,
            )?;
            let body = ResBlock::new(
                store,
                rng,
                &format!("field.block{i}"),
                hidden,
                hidden,
                hidden,
            )?;
            field_blocks.push(FieldBlock { cond, body });
        }
        // zero-initialized output: training starts at mid-gray
        let out = Linear::new(store, rng, "field.out", hidden, 3, Init::Zero)?;
        Ok(Self {
            lift,
            blocks: field_blocks,
            out,
            cond_dim,
        })
    }

    /// `points` is [N,3]; `s` and `z` are single rows. Returns [N,3] colors
    /// in (0,1).
    pub fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        binding: &Binding,
        points: NodeId,
        s: NodeId,
        z: NodeId,
    ) -> Result<NodeId> {
        let (_, coords) = tape.value(points).dims2()?;
        if coords != 3 {
            return Err(Error::Contract(format!(
                "field expects [N,3] points, got {:?}",
                tape.shape(points)
            )));
        }
        let cond = tape.concat_cols(s, z)?;
        let (_, cd) = tape.value(cond).dims2()?;
        if cd != self.cond_dim {
            return Err(Error::Contract(format!(
                "condition dim {cd} does not match configured {}",
                self.cond_dim
            )));
        }
        let mut h = self.lift.forward(tape, binding, points)?;
        for block in &self.blocks {
            let c = block.cond.forward(tape, binding, cond)?;
            h = tape.add_broadcast_row(h, c)?;
            h = block.body.forward(tape, binding, h)?;
        }
        let logits = self.out.forward(tape, binding, h)?;
        Ok(tape.sigmoid(logits))
    }
}
