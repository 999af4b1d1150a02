//! Loss graphs for conditional and VAE training.

use super::batch::Batch;
use crate::autodiff::{Binding, NodeId, Scalar, Tape, Tensor};
use crate::error::{Error, Result};
use crate::nets::{reparameterize, Mode, TextureFieldModel};

/// Sum of absolute differences over every entry: for [N,3] predictions
/// this is the sum over pixels of the 3-channel l1 distance.
pub fn l1_sum<T: Scalar>(tape: &mut Tape<T>, pred: NodeId, target: NodeId) -> Result<NodeId> {
    let diff = tape.sub(pred, target)?;
    let mag = tape.abs(diff);
    tape.sum_all(mag)
}

/// KL(N(mu, sigma) || N(0, I)) for a diagonal Gaussian, summed over every
/// entry: sum_j 0.5 * (mu_j^2 + sigma_j^2 - 1 - 2 log sigma_j).
pub fn kl_standard_normal<T: Scalar>(
    tape: &mut Tape<T>,
    mu: NodeId,
    log_sigma: NodeId,
) -> Result<NodeId> {
    tape.value(mu).validate_finite("kl mean")?;
    tape.value(log_sigma).validate_finite("kl log-sigma")?;
    let mu_sq = tape.mul(mu, mu)?;
    let two_log = tape.scale(log_sigma, T::from_f64(2.0));
    let sigma_sq = tape.exp(two_log);
    let sum = tape.add(mu_sq, sigma_sq)?;
    let sum = tape.add_const(sum, T::from_f64(-1.0));
    let sum = tape.sub(sum, two_log)?;
    let total = tape.sum_all(sum)?;
    Ok(tape.scale(total, T::from_f64(0.5)))
}

/// Shape embeddings for each batch element, encoding every distinct object
/// once. Overfit mode yields zero rows of the configured width.
fn shape_rows<T: Scalar>(
    tape: &mut Tape<T>,
    binding: &Binding,
    model: &TextureFieldModel<T>,
    batch: &Batch,
) -> Result<Vec<NodeId>> {
    let mut memo: Vec<(usize, NodeId)> = Vec::new();
    let mut rows = Vec::with_capacity(batch.elements.len());
    for elem in &batch.elements {
        if let Some(encoder) = &model.shape_encoder {
            if let Some(&(_, node)) = memo.iter().find(|(obj, _)| *obj == elem.object) {
                rows.push(node);
                continue;
            }
            let cloud = elem.cloud.as_ref().ok_or_else(|| {
                Error::Contract("batch element lacks a point cloud for the shape encoder".into())
            })?;
            let n = cloud.len() / 3;
            let data: Vec<T> = cloud.iter().map(|&v| T::from_f64(v as f64)).collect();
            let pts = tape.constant(vec![n, 3], data)?;
            let s = encoder.forward(tape, binding, pts)?;
            memo.push((elem.object, s));
            rows.push(s);
        } else {
            let s = tape.leaf(Tensor::zeros(vec![1, model.config.s_dim]));
            rows.push(s);
        }
    }
    Ok(rows)
}

/// Stack per-element encoder images into one [B, F] leaf.
fn image_matrix<T: Scalar>(tape: &mut Tape<T>, batch: &Batch, feature_dim: usize) -> Result<NodeId> {
    let b = batch.elements.len();
    let mut data = Vec::with_capacity(b * feature_dim);
    for elem in &batch.elements {
        let img = elem
            .image
            .as_ref()
            .ok_or_else(|| Error::Contract("batch element lacks a condition image".into()))?;
        if img.len() != feature_dim {
            return Err(Error::Contract(format!(
                "condition image has {} values, encoder expects {feature_dim}",
                img.len()
            )));
        }
        data.extend(img.iter().map(|&v| T::from_f64(v as f64)));
    }
    tape.constant(vec![b, feature_dim], data)
}

fn reconstruction_sum<T: Scalar>(
    tape: &mut Tape<T>,
    binding: &Binding,
    model: &TextureFieldModel<T>,
    batch: &Batch,
    s_rows: &[NodeId],
    z_rows: &[NodeId],
) -> Result<NodeId> {
    let mut total: Option<NodeId> = None;
    for (idx, elem) in batch.elements.iter().enumerate() {
        let n = elem.points.len() / 3;
        if n == 0 {
            return Err(Error::Contract(format!(
                "batch element {idx} has no foreground pixels"
            )));
        }
        let pts: Vec<T> = elem.points.iter().map(|&v| T::from_f64(v as f64)).collect();
        let tgt: Vec<T> = elem.targets.iter().map(|&v| T::from_f64(v as f64)).collect();
        let points = tape.constant(vec![n, 3], pts)?;
        let targets = tape.constant(vec![n, 3], tgt)?;
        let colors = model
            .field
            .forward(tape, binding, points, s_rows[idx], z_rows[idx])?;
        let mut term = l1_sum(tape, colors, targets)?;
        if elem.scale != 1.0 {
            term = tape.scale(term, T::from_f64(elem.scale));
        }
        total = Some(match total {
            None => term,
            Some(acc) => tape.add(acc, term)?,
        });
    }
    total.ok_or_else(|| Error::Contract("empty batch".into()))
}

/// Mean over batch elements of the (subsample-scaled) sum over foreground
/// pixels of the per-pixel l1 distance, with gradients into the field and
/// both encoders.
pub fn conditional_loss<T: Scalar>(
    tape: &mut Tape<T>,
    binding: &Binding,
    model: &TextureFieldModel<T>,
    batch: &Batch,
) -> Result<NodeId> {
    if batch.elements.is_empty() {
        return Err(Error::Contract("conditional loss over an empty batch".into()));
    }
    let b = batch.elements.len();
    let s_rows = shape_rows(tape, binding, model, batch)?;
    let z_rows: Vec<NodeId> = match (&model.image_encoder, model.config.mode) {
        (Some(encoder), _) => {
            let images = image_matrix(tape, batch, encoder.input_dim)?;
            let z_all = encoder.forward(tape, binding, images)?;
            (0..b)
                .map(|i| tape.slice_rows(z_all, i, 1))
                .collect::<Result<_>>()?
        }
        (None, Mode::Overfit) => (0..b)
            .map(|_| Ok(tape.leaf(Tensor::zeros(vec![1, model.config.z_dim]))))
            .collect::<Result<_>>()?,
        (None, mode) => {
            return Err(Error::Contract(format!(
                "conditional loss needs an image encoder, model mode is {}",
                mode.as_str()
            )))
        }
    };
    let total = reconstruction_sum(tape, binding, model, batch, &s_rows, &z_rows)?;
    Ok(tape.scale(total, T::from_f64(1.0 / b as f64)))
}

pub struct VaeLossParts {
    pub loss: NodeId,
    /// KL summed over the batch (before the 1/B mean)
    pub kl_sum: NodeId,
    /// reconstruction summed over the batch (before the 1/B mean)
    pub rec_sum: NodeId,
}

/// The variational objective: mean over the batch of
/// beta * KL(q(z|X,s) || N(0,I)) + sum_i |t(p_i, s, z) - c_i|_1,
/// with z drawn once per element through the reparameterization trick.
pub fn vae_loss<T: Scalar>(
    tape: &mut Tape<T>,
    binding: &Binding,
    model: &TextureFieldModel<T>,
    batch: &Batch,
    eps: &[T],
    beta: f64,
) -> Result<VaeLossParts> {
    if batch.elements.is_empty() {
        return Err(Error::Contract("vae loss over an empty batch".into()));
    }
    let encoder = model
        .vae_encoder
        .as_ref()
        .ok_or_else(|| Error::Contract("vae loss needs a model in vae mode".into()))?;
    let b = batch.elements.len();
    let z_dim = model.config.z_dim;
    if eps.len() != b * z_dim {
        return Err(Error::Contract(format!(
            "noise must be [B={b}, z={z_dim}], got {} values",
            eps.len()
        )));
    }
    let s_rows = shape_rows(tape, binding, model, batch)?;
    let s_matrix = tape.concat_rows(&s_rows)?;
    let images = image_matrix(tape, batch, encoder.input_dim)?;
    let (mu, log_sigma) = encoder.forward(tape, binding, images, s_matrix)?;
    let eps_node = tape.constant(vec![b, z_dim], eps.to_vec())?;
    let z_all = reparameterize(tape, mu, log_sigma, eps_node)?;
    let z_rows: Vec<NodeId> = (0..b)
        .map(|i| tape.slice_rows(z_all, i, 1))
        .collect::<Result<_>>()?;

    let kl_sum = kl_standard_normal(tape, mu, log_sigma)?;
    let rec_sum = reconstruction_sum(tape, binding, model, batch, &s_rows, &z_rows)?;
    let kl_scaled = tape.scale(kl_sum, T::from_f64(beta));
    let combined = tape.add(kl_scaled, rec_sum)?;
    let loss = tape.scale(combined, T::from_f64(1.0 / b as f64));
    Ok(VaeLossParts {
        loss,
        kl_sum,
        rec_sum,
    })
}
