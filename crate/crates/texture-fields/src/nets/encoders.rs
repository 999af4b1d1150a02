//! Image-side encoders.
//!
//! Both encoders are deliberately small MLPs over an area-downsampled
//! image rather than pretrained convolutional stacks, keeping the pipeline
//! free of external weights. They sit behind their own structs so an
//! alternative encoder can be slotted in without touching callers.

use super::layers::{Init, Linear};
use crate::autodiff::{Binding, NodeId, ParamStore, Scalar, Tape};
use crate::error::{Error, Result};
use rand_chacha::ChaCha12Rng;

const HIDDEN_LAYERS: usize = 3;

/// Deterministic image-to-latent encoder for the conditional model:
/// flattened pixels through three ReLU hidden layers to the latent code.
#[derive(Debug, Clone)]
pub struct ImageEncoder {
    pub layers: Vec<Linear>,
    pub out: Linear,
    pub input_dim: usize,
}

impl ImageEncoder {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut ChaCha12Rng,
        resolution: usize,
        hidden: usize,
        z_dim: usize,
    ) -> Result<Self> {
        let input_dim = resolution * resolution * 3;
        let mut layers = Vec::with_capacity(HIDDEN_LAYERS);
        let mut dim = input_dim;
        for i in 0..HIDDEN_LAYERS {
            layers.push(Linear::new(
                store,
                rng,
                &format!("image.fc{i}"),
                dim,
                hidden,
                Init::KaimingUniform,
            )?);
            dim = hidden;
        }
        let out = Linear::new(store, rng, "image.out", hidden, z_dim, Init::KaimingUniform)?;
        Ok(Self {
            layers,
            out,
            input_dim,
        })
    }

    /// `images` is [B, res*res*3]. Returns [B, z_dim].
    pub fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        binding: &Binding,
        images: NodeId,
    ) -> Result<NodeId> {
        let (_, f) = tape.value(images).dims2()?;
        if f != self.input_dim {
            return Err(Error::Contract(format!(
                "image encoder expects {} features per image, got {f}",
                self.input_dim
            )));
        }
        let mut h = images;
        for layer in &self.layers {
            h = layer.forward(tape, binding, h)?;
            h = tape.relu(h);
        }
        self.out.forward(tape, binding, h)
    }
}

/// VAE encoder: predicts the posterior mean and log-standard deviation.
/// The shape embedding enters additively, as a linear projection onto the
/// flattened image features.
#[derive(Debug, Clone)]
pub struct VaeEncoder {
    pub proj_s: Linear,
    pub layers: Vec<Linear>,
    pub mu: Linear,
    pub log_sigma: Linear,
    pub input_dim: usize,
}

impl VaeEncoder {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        rng: &mut ChaCha12Rng,
        resolution: usize,
        hidden: usize,
        s_dim: usize,
        z_dim: usize,
    ) -> Result<Self> {
        let input_dim = resolution * resolution * 3;
        let proj_s = Linear::new(store, rng, "vae.proj_s", s_dim, input_dim, Init::KaimingUniform)?;
        let mut layers = Vec::with_capacity(HIDDEN_LAYERS);
        let mut dim = input_dim;
        for i in 0..HIDDEN_LAYERS {
            layers.push(Linear::new(
                store,
                rng,
                &format!("vae.fc{i}"),
                dim,
                hidden,
                Init::KaimingUniform,
            )?);
            dim = hidden;
        }
        let mu = Linear::new(store, rng, "vae.mu", hidden, z_dim, Init::KaimingUniform)?;
        let log_sigma = Linear::new(store, rng, "vae.log_sigma", hidden, z_dim, Init::KaimingUniform)?;
        Ok(Self {
            proj_s,
            layers,
            mu,
            log_sigma,
            input_dim,
        })
    }

    /// `images` is [B, res*res*3], `s` is [B, s_dim]. Returns (mu, log_sigma),
    /// both [B, z_dim].
    pub fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        binding: &Binding,
        images: NodeId,
        s: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        let (bi, f) = tape.value(images).dims2()?;
        if f != self.input_dim {
            return Err(Error::Contract(format!(
                "vae encoder expects {} features per image, got {f}",
                self.input_dim
            )));
        }
        let (bs, _) = tape.value(s).dims2()?;
        if bi != bs {
            return Err(Error::Contract(format!(
                "vae encoder got {bi} images but {bs} shape embeddings"
            )));
        }
        let injected = self.proj_s.forward(tape, binding, s)?;
        let mut h = tape.add(images, injected)?;
        for layer in &self.layers {
            h = layer.forward(tape, binding, h)?;
            h = tape.relu(h);
        }
        let mu = self.mu.forward(tape, binding, h)?;
        let log_sigma = self.log_sigma.forward(tape, binding, h)?;
        Ok((mu, log_sigma))
    }
}

/// z = mu + exp(log_sigma) ∘ eps; gradients flow through mu and log_sigma.
pub fn reparameterize<T: Scalar>(
    tape: &mut Tape<T>,
    mu: NodeId,
    log_sigma: NodeId,
    eps: NodeId,
) -> Result<NodeId> {
    if tape.shape(mu) != tape.shape(eps) || tape.shape(mu) != tape.shape(log_sigma) {
        return Err(Error::Contract(format!(
            "reparameterize dims disagree: mu {:?}, log_sigma {:?}, eps {:?}",
            tape.shape(mu),
            tape.shape(log_sigma),
            tape.shape(eps)
        )));
    }
    let sigma = tape.exp(log_sigma);
    let scaled = tape.mul(sigma, eps)?;
    tape.add(mu, scaled)
}
