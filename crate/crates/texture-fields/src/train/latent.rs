//! Latent-space utilities: prior sampling and interpolation.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// i.i.d. standard-normal latent code, deterministic per seed.
pub fn sample_prior(dim: usize, seed: u64) -> Result<Vec<f32>> {
    if dim == 0 {
        return Err(Error::Contract("latent dimension must be >= 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok((0..dim)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v as f32
        })
        .collect())
}

/// Linear interpolation with both endpoints included.
pub fn interpolate_latent(a: &[f32], b: &[f32], steps: usize) -> Result<Vec<Vec<f32>>> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "latent dims disagree: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if steps < 2 {
        return Err(Error::Contract("interpolation needs >= 2 steps".into()));
    }
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = k as f32 / (steps - 1) as f32;
        out.push(
            a.iter()
                .zip(b)
                .map(|(&x, &y)| x + t * (y - x))
                .collect(),
        );
    }
    Ok(out)
}
