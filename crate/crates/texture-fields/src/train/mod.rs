//! Training loops for the conditional and VAE objectives.
//!
//! Each step draws a batch, builds the loss graph on a fresh tape, runs
//! backward, and applies one Adam update. All randomness flows from the
//! config seed through fixed per-component sub-seeds, so identical configs
//! produce bitwise-identical checkpoints and loss logs.

pub mod batch;
pub mod latent;
pub mod loss;

pub use batch::{draw_batch, Batch, BatchElement, LoadedDataset};
pub use latent::{interpolate_latent, sample_prior};
pub use loss::{conditional_loss, kl_standard_normal, l1_sum, vae_loss};

use crate::autodiff::{checkpoint, AdamState, Tape};
use crate::error::{Error, Result};
use crate::nets::{Mode, ModelConfig, TextureFieldModel};
use crate::raster::dataset::{derive_seed, DatasetManifest};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    /// at most this many foreground pixels per view per step
    pub pixel_cap: usize,
    pub iterations: usize,
    pub seed: u64,
    /// KL weight in the variational objective
    pub beta: f64,
    /// checkpoint every this many steps; 0 disables periodic checkpoints
    pub checkpoint_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            batch_size: 8,
            pixel_cap: 1024,
            iterations: 1000,
            seed: 0,
            beta: 1.0,
            checkpoint_interval: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be > 0", self.lr)));
        }
        if self.beta < 0.0 {
            return Err(Error::Config(format!("beta {} must be >= 0", self.beta)));
        }
        if self.batch_size == 0 || self.pixel_cap == 0 {
            return Err(Error::Config("batch size and pixel cap must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub loss: f64,
    pub kl: Option<f64>,
}

impl LossRecord {
    pub fn to_line(&self) -> String {
        match self.kl {
            Some(kl) => format!("step={} loss={} kl={}", self.step, self.loss, kl),
            None => format!("step={} loss={}", self.step, self.loss),
        }
    }
}

pub struct TrainOutput {
    pub model: TextureFieldModel<f32>,
    pub adam: AdamState<f32>,
    pub log: Vec<LossRecord>,
}

pub const LOSS_LOG_FILE: &str = "loss_log.txt";

/// Run the configured iterations over a rendered dataset. When `out_dir`
/// is given, the final model, optimizer state, and loss log are persisted
/// there (plus periodic checkpoints if configured).
pub fn train(
    manifest: &DatasetManifest,
    model_config: ModelConfig,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
    mut on_step: impl FnMut(&LossRecord),
) -> Result<TrainOutput> {
    cfg.validate()?;
    if model_config.mode == Mode::Overfit && manifest.objects.len() != 1 {
        return Err(Error::Contract(format!(
            "overfit mode expects exactly one object, dataset has {}",
            manifest.objects.len()
        )));
    }
    let mut model = TextureFieldModel::<f32>::build(model_config, derive_seed(cfg.seed, 1))?;
    let dataset = LoadedDataset::load(manifest, &model.config, cfg.seed)?;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, 3));
    let mut adam = AdamState::new(&model.store, cfg.lr as f32);

    let mut log_file = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(LOSS_LOG_FILE);
            Some(std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?)
        }
        None => None,
    };
    let mut log = Vec::with_capacity(cfg.iterations);

    for step in 1..=cfg.iterations {
        let batch = draw_batch(
            &dataset,
            model.config.mode,
            cfg.batch_size,
            cfg.pixel_cap,
            &mut rng,
        )?;
        let mut tape = Tape::new();
        let binding = model.store.bind(&mut tape);
        let record = match model.config.mode {
            Mode::Overfit | Mode::Conditional => {
                let loss = conditional_loss(&mut tape, &binding, &model, &batch)?;
                let value = tape.data(loss)[0] as f64;
                if !value.is_finite() {
                    return Err(Error::NonFinite(format!("loss at iteration {step}")));
                }
                tape.backward(loss)?;
                LossRecord {
                    step,
                    loss: value,
                    kl: None,
                }
            }
            Mode::Vae => {
                let eps: Vec<f32> = (0..cfg.batch_size * model.config.z_dim)
                    .map(|_| {
                        let v: f64 = StandardNormal.sample(&mut rng);
                        v as f32
                    })
                    .collect();
                let parts = vae_loss(&mut tape, &binding, &model, &batch, &eps, cfg.beta)?;
                let value = tape.data(parts.loss)[0] as f64;
                let kl = tape.data(parts.kl_sum)[0] as f64 / cfg.batch_size as f64;
                if !value.is_finite() {
                    return Err(Error::NonFinite(format!("loss at iteration {step}")));
                }
                tape.backward(parts.loss)?;
                LossRecord {
                    step,
                    loss: value,
                    kl: Some(kl),
                }
            }
        };
        model.store.write_grads(&tape, &binding)?;
        drop(tape);
        adam.step(&mut model.store)?;
        model.store.zero_grads();

        if let Some(file) = &mut log_file {
            writeln!(file, "{}", record.to_line())
                .map_err(|e| Error::io(out_dir.unwrap().join(LOSS_LOG_FILE), e))?;
        }
        on_step(&record);
        log.push(record);

        if cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0 {
            if let Some(dir) = out_dir {
                let params = dir.join(format!("params_step{step:07}.texf"));
                checkpoint::save_params(&params, &model.store)?;
                let optim = dir.join(format!("optim_step{step:07}.texf"));
                checkpoint::save_adam(&optim, &model.store, &adam)?;
            }
        }
    }

    if let Some(dir) = out_dir {
        model.save(dir)?;
        checkpoint::save_adam(
            &dir.join(TextureFieldModel::<f32>::OPTIM_FILE),
            &model.store,
            &adam,
        )?;
    }
    Ok(TrainOutput { model, adam, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::six_color_cube;
    use crate::raster::dataset::{generate_dataset, GenOptions};

    fn tiny_manifest(dir: &Path) -> DatasetManifest {
        let opts = GenOptions {
            views: 3,
            resolution: 16,
            seed: 2,
            ..Default::default()
        };
        generate_dataset(&[("cube".into(), six_color_cube(1))], &opts, dir).unwrap()
    }

    fn tiny_overfit_config() -> ModelConfig {
        let mut config = ModelConfig::overfit();
        config.blocks = 1;
        config.hidden = 8;
        config
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let dir = std::env::temp_dir().join("texf_train_noop");
        let manifest = tiny_manifest(&dir);
        let cfg = TrainConfig {
            iterations: 0,
            seed: 4,
            ..Default::default()
        };
        let out = train(&manifest, tiny_overfit_config(), &cfg, None, |_| {}).unwrap();
        let fresh =
            TextureFieldModel::<f32>::build(tiny_overfit_config(), derive_seed(4, 1)).unwrap();
        for ((_, a), (_, b)) in out.model.store.iter().zip(fresh.store.iter()) {
            assert_eq!(a.data(), b.data());
        }
        assert!(out.log.is_empty());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn same_seed_gives_identical_loss_logs() {
        let dir = std::env::temp_dir().join("texf_train_det");
        let manifest = tiny_manifest(&dir);
        let cfg = TrainConfig {
            iterations: 5,
            seed: 9,
            batch_size: 2,
            pixel_cap: 16,
            ..Default::default()
        };
        let a = train(&manifest, tiny_overfit_config(), &cfg, None, |_| {}).unwrap();
        let b = train(&manifest, tiny_overfit_config(), &cfg, None, |_| {}).unwrap();
        assert_eq!(a.log, b.log);
        for ((_, ta), (_, tb)) in a.model.store.iter().zip(b.model.store.iter()) {
            assert_eq!(ta.data(), tb.data());
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn loss_decreases_on_a_tiny_overfit() {
        let dir = std::env::temp_dir().join("texf_train_descent");
        let manifest = tiny_manifest(&dir);
        let cfg = TrainConfig {
            iterations: 60,
            seed: 7,
            batch_size: 2,
            pixel_cap: 32,
            lr: 1e-2,
            ..Default::default()
        };
        let out = train(&manifest, tiny_overfit_config(), &cfg, None, |_| {}).unwrap();
        let first = out.log.first().unwrap().loss;
        let last = out.log.last().unwrap().loss;
        assert!(
            last < first,
            "loss should decrease: first {first}, last {last}"
        );
        std::fs::remove_dir_all(&dir).ok();
    }
}
