//! Dataset loading and mini-batch assembly.
//!
//! Views are unprojected once at load time: every foreground pixel becomes
//! a (3D point, target color) pair via p = d R K^-1 u + t. Batches then
//! subsample at most `pixel_cap` pixels per view, scaled by N_b / cap so
//! the estimator of the full per-view sum stays unbiased.

use crate::error::{Error, Result};
use crate::geometry::{sample_surface, Camera};
use crate::nets::{prepare_encoder_input, Mode, ModelConfig};
use crate::raster::dataset::{derive_seed, DatasetManifest};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct BatchElement {
    pub object: usize,
    /// sampled foreground points, row-major [n,3]
    pub points: Vec<f32>,
    /// target colors aligned with `points`
    pub targets: Vec<f32>,
    /// N_b / n: restores the full-view sum in expectation
    pub scale: f64,
    /// surface point cloud rows when a shape encoder is present
    pub cloud: Option<Vec<f32>>,
    /// encoder-resolution condition (or VAE target) image
    pub image: Option<Vec<f32>>,
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub elements: Vec<BatchElement>,
}

/// One dataset view with all its foreground pixels unprojected.
#[derive(Debug, Clone)]
pub struct LoadedView {
    pub camera: Camera,
    pub points: Vec<[f32; 3]>,
    pub colors: Vec<[f32; 3]>,
    pub encoder_image: Option<Vec<f32>>,
}

#[derive(Debug, Clone)]
pub struct LoadedObject {
    pub id: usize,
    pub cloud_rows: Option<Vec<f32>>,
    pub views: Vec<LoadedView>,
}

#[derive(Debug)]
pub struct LoadedDataset {
    pub objects: Vec<LoadedObject>,
    pub width: usize,
    pub height: usize,
}

impl LoadedDataset {
    /// Load every view of every object, unproject foreground pixels, and
    /// (when the model needs them) sample per-object point clouds with
    /// sub-seeds derived from `seed`.
    pub fn load(manifest: &DatasetManifest, config: &ModelConfig, seed: u64) -> Result<Self> {
        let needs_cloud = config.mode != Mode::Overfit;
        let needs_image = config.mode != Mode::Overfit;
        let mut objects = Vec::with_capacity(manifest.objects.len());
        for entry in &manifest.objects {
            let cloud_rows = if needs_cloud {
                // the mesh itself is only needed to sample the encoder cloud;
                // supervision points come from unprojected depth pixels
                let mesh = manifest.load_object_mesh(entry.id)?;
                let cloud = sample_surface(
                    &mesh,
                    config.shape_points,
                    derive_seed(seed, 2000 + entry.id as u64),
                    &entry.mesh,
                )?;
                Some(cloud.to_rows_f32())
            } else {
                None
            };
            let mut views = Vec::new();
            for view in manifest.views_of(entry.id) {
                let sample = manifest.load_view(view)?;
                let mut points = Vec::new();
                let mut colors = Vec::new();
                for idx in sample.foreground_pixels() {
                    let (x, y) = (idx % sample.width(), idx / sample.width());
                    let d = sample.depth[idx] as f64;
                    let p = sample
                        .camera
                        .unproject([x as f64 + 0.5, y as f64 + 0.5], d)?;
                    points.push([p.x as f32, p.y as f32, p.z as f32]);
                    let c = sample.pixel(x, y);
                    colors.push(c);
                }
                let encoder_image = if needs_image {
                    Some(prepare_encoder_input(
                        &sample.image,
                        sample.width(),
                        sample.height(),
                        config.encoder_res,
                    )?)
                } else {
                    None
                };
                views.push(LoadedView {
                    camera: sample.camera,
                    points,
                    colors,
                    encoder_image,
                });
            }
            if views.is_empty() {
                return Err(Error::Contract(format!(
                    "object {} has no views in the manifest",
                    entry.id
                )));
            }
            objects.push(LoadedObject {
                id: entry.id,
                cloud_rows,
                views,
            });
        }
        Ok(Self {
            objects,
            width: manifest.width,
            height: manifest.height,
        })
    }
}

/// Choose at most `cap` distinct pixel indices and the matching unbias
/// scale N/n.
pub fn select_pixels(rng: &mut ChaCha12Rng, total: usize, cap: usize) -> (Vec<usize>, f64) {
    if total <= cap {
        return ((0..total).collect(), 1.0);
    }
    let picked = rand::seq::index::sample(rng, total, cap).into_vec();
    (picked, total as f64 / cap as f64)
}

/// Draw one training batch. In conditional mode the condition view is
/// drawn uniformly and the supervision view uniformly among the remaining
/// views; in VAE mode one view serves as both encoder input and target.
pub fn draw_batch(
    dataset: &LoadedDataset,
    mode: Mode,
    batch_size: usize,
    pixel_cap: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Batch> {
    if batch_size == 0 {
        return Err(Error::Contract("batch size must be >= 1".into()));
    }
    let mut elements = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let obj = &dataset.objects[rng.gen_range(0..dataset.objects.len())];
        let n_views = obj.views.len();
        let (supervision_idx, condition_idx) = match mode {
            Mode::Overfit => (rng.gen_range(0..n_views), None),
            Mode::Vae => {
                let v = rng.gen_range(0..n_views);
                (v, Some(v))
            }
            Mode::Conditional => {
                if n_views < 2 {
                    return Err(Error::Contract(format!(
                        "conditional training needs >= 2 views per object, object {} has {n_views}",
                        obj.id
                    )));
                }
                let cond = rng.gen_range(0..n_views);
                // uniform among the remaining views
                let mut sup = rng.gen_range(0..n_views - 1);
                if sup >= cond {
                    sup += 1;
                }
                (sup, Some(cond))
            }
        };
        let view = &obj.views[supervision_idx];
        if view.points.is_empty() {
            return Err(Error::Contract(format!(
                "object {} view {supervision_idx} has no foreground pixels",
                obj.id
            )));
        }
        let (chosen, scale) = select_pixels(rng, view.points.len(), pixel_cap);
        let mut points = Vec::with_capacity(chosen.len() * 3);
        let mut targets = Vec::with_capacity(chosen.len() * 3);
        for &i in &chosen {
            points.extend_from_slice(&view.points[i]);
            targets.extend_from_slice(&view.colors[i]);
        }
        let image = condition_idx.map(|ci| {
            obj.views[ci]
                .encoder_image
                .clone()
                .expect("encoder image prepared for non-overfit modes")
        });
        elements.push(BatchElement {
            object: obj.id,
            points,
            targets,
            scale,
            cloud: obj.cloud_rows.clone(),
            image,
        });
    }
    Ok(Batch { elements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn pixel_subsampling_is_unbiased() {
        // per-pixel values; the scaled subsample mean must match the full sum
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let values: Vec<f64> = (0..400).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let full: f64 = values.iter().sum();
        let cap = 50;
        let trials = 1000;
        let mut mean = 0.0;
        for _ in 0..trials {
            let (chosen, scale) = select_pixels(&mut rng, values.len(), cap);
            assert_eq!(chosen.len(), cap);
            let est: f64 = chosen.iter().map(|&i| values[i]).sum::<f64>() * scale;
            mean += est / trials as f64;
        }
        let rel = (mean - full).abs() / full;
        assert!(rel <= 0.01, "relative bias {rel}");
    }

    #[test]
    fn small_views_are_taken_whole() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let (chosen, scale) = select_pixels(&mut rng, 10, 64);
        assert_eq!(chosen, (0..10).collect::<Vec<_>>());
        assert_eq!(scale, 1.0);
    }
}
