//! Network architectures and the assembled model.

pub mod encoders;
pub mod field;
pub mod layers;
pub mod pointnet;

pub use encoders::{reparameterize, ImageEncoder, VaeEncoder};
pub use field::FieldNet;
pub use pointnet::PointNetEncoder;

use crate::autodiff::{checkpoint, NodeId, ParamStore, Scalar, Tape, Tensor};
use crate::error::{Error, Result};
use crate::kv::KvDoc;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Single fixed shape, no encoders; s and z are fixed zero vectors.
    Overfit,
    /// Latent code comes from an image encoder.
    Conditional,
    /// Latent code is a Gaussian posterior sample (or a prior draw).
    Vae,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Overfit => "overfit",
            Mode::Conditional => "conditional",
            Mode::Vae => "vae",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "overfit" => Ok(Mode::Overfit),
            "conditional" => Ok(Mode::Conditional),
            "vae" => Ok(Mode::Vae),
            other => Err(Error::Config(format!("unknown model mode `{other}`"))),
        }
    }
}

/// Hyperparameters of the assembled model. Defaults: 6 residual blocks in
/// conditional mode, 4 in generative mode, hidden width 128, embeddings
/// s = 512 and z = 128, encoder input 64x64.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub mode: Mode,
    pub blocks: usize,
    pub hidden: usize,
    pub s_dim: usize,
    pub z_dim: usize,
    pub encoder_res: usize,
    pub encoder_hidden: usize,
    pub pointnet_hidden: usize,
    pub shape_points: usize,
}

impl ModelConfig {
    pub fn conditional() -> Self {
        Self {
            mode: Mode::Conditional,
            blocks: 6,
            hidden: 128,
            s_dim: 512,
            z_dim: 128,
            encoder_res: 64,
            encoder_hidden: 512,
            pointnet_hidden: 128,
            shape_points: 2048,
        }
    }

    pub fn vae() -> Self {
        Self {
            mode: Mode::Vae,
            blocks: 4,
            ..Self::conditional()
        }
    }

    /// Overfit mode consumes no shape or appearance conditioning, so the
    /// embeddings default to width zero (condition injection degenerates
    /// to a per-block bias).
    pub fn overfit() -> Self {
        Self {
            mode: Mode::Overfit,
            blocks: 4,
            s_dim: 0,
            z_dim: 0,
            ..Self::conditional()
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut doc = KvDoc::new();
        doc.push("format", "texf-model-config-v1");
        doc.push("mode", self.mode.as_str());
        doc.push("blocks", self.blocks);
        doc.push("hidden", self.hidden);
        doc.push("s_dim", self.s_dim);
        doc.push("z_dim", self.z_dim);
        doc.push("encoder_res", self.encoder_res);
        doc.push("encoder_hidden", self.encoder_hidden);
        doc.push("pointnet_hidden", self.pointnet_hidden);
        doc.push("shape_points", self.shape_points);
        doc.write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let doc = KvDoc::read(path)?;
        Ok(Self {
            mode: Mode::parse(doc.require("mode")?)?,
            blocks: doc.parse_value("blocks")?,
            hidden: doc.parse_value("hidden")?,
            s_dim: doc.parse_value("s_dim")?,
            z_dim: doc.parse_value("z_dim")?,
            encoder_res: doc.parse_value("encoder_res")?,
            encoder_hidden: doc.parse_value("encoder_hidden")?,
            pointnet_hidden: doc.parse_value("pointnet_hidden")?,
            shape_points: doc.parse_value("shape_points")?,
        })
    }
}

/// Field parameters plus whichever encoders the mode requires, all in one
/// parameter store.
#[derive(Debug, Clone)]
pub struct TextureFieldModel<T: Scalar> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    pub field: FieldNet,
    pub shape_encoder: Option<PointNetEncoder>,
    pub image_encoder: Option<ImageEncoder>,
    pub vae_encoder: Option<VaeEncoder>,
}

impl<T: Scalar> TextureFieldModel<T> {
    pub fn build(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let field = FieldNet::new(
            &mut store,
            &mut rng,
            config.blocks,
            config.hidden,
            config.s_dim,
            config.z_dim,
        )?;
        let (shape_encoder, image_encoder, vae_encoder) = match config.mode {
            Mode::Overfit => (None, None, None),
            Mode::Conditional => (
                Some(PointNetEncoder::new(
                    &mut store,
                    &mut rng,
                    config.pointnet_hidden,
                    config.s_dim,
                )?),
                Some(ImageEncoder::new(
                    &mut store,
                    &mut rng,
                    config.encoder_res,
                    config.encoder_hidden,
                    config.z_dim,
                )?),
                None,
            ),
            Mode::Vae => (
                Some(PointNetEncoder::new(
                    &mut store,
                    &mut rng,
                    config.pointnet_hidden,
                    config.s_dim,
                )?),
                None,
                Some(VaeEncoder::new(
                    &mut store,
                    &mut rng,
                    config.encoder_res,
                    config.encoder_hidden,
                    config.s_dim,
                    config.z_dim,
                )?),
            ),
        };
        Ok(Self {
            config,
            store,
            field,
            shape_encoder,
            image_encoder,
            vae_encoder,
        })
    }

    pub const CONFIG_FILE: &'static str = "model_config.txt";
    pub const PARAMS_FILE: &'static str = "params.texf";
    pub const OPTIM_FILE: &'static str = "optim.texf";

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.config.write(&dir.join(Self::CONFIG_FILE))?;
        checkpoint::save_params(&dir.join(Self::PARAMS_FILE), &self.store)
    }

    /// Rebuild the architecture from its config and load the checkpoint.
    pub fn load(dir: &Path) -> Result<Self> {
        let config = ModelConfig::read(&dir.join(Self::CONFIG_FILE))?;
        let mut model = Self::build(config, 0)?;
        checkpoint::load_params(&dir.join(Self::PARAMS_FILE), &mut model.store)?;
        Ok(model)
    }

    /// Zero row leaves for s and z, used by overfit mode and as neutral
    /// conditioning.
    pub fn zero_condition(&self, tape: &mut Tape<T>) -> (NodeId, NodeId) {
        let s = tape.leaf(Tensor::zeros(vec![1, self.config.s_dim]));
        let z = tape.leaf(Tensor::zeros(vec![1, self.config.z_dim]));
        (s, z)
    }

    /// Evaluate the field without tracking gradients, in point batches.
    /// `s_row` and `z_row` must have the configured embedding widths.
    pub fn eval_colors(&self, points: &[[f32; 3]], s_row: &[T], z_row: &[T]) -> Result<Vec<[f32; 3]>> {
        if s_row.len() != self.config.s_dim || z_row.len() != self.config.z_dim {
            return Err(Error::Contract(format!(
                "conditioning dims ({}, {}) do not match config ({}, {})",
                s_row.len(),
                z_row.len(),
                self.config.s_dim,
                self.config.z_dim
            )));
        }
        let mut out = Vec::with_capacity(points.len());
        // chunk to bound tape memory on large queries
        const CHUNK: usize = 16384;
        for chunk in points.chunks(CHUNK.max(1)) {
            let mut tape = Tape::new();
            let binding = self.store.bind(&mut tape);
            let mut rows = Vec::with_capacity(chunk.len() * 3);
            for p in chunk {
                rows.extend(p.iter().map(|&v| T::from_f64(v as f64)));
            }
            let pts = tape.constant(vec![chunk.len(), 3], rows)?;
            let s = tape.constant(vec![1, self.config.s_dim], s_row.to_vec())?;
            let z = tape.constant(vec![1, self.config.z_dim], z_row.to_vec())?;
            let colors = self.field.forward(&mut tape, &binding, pts, s, z)?;
            for row in tape.data(colors).chunks(3) {
                out.push([
                    row[0].to_f64() as f32,
                    row[1].to_f64() as f32,
                    row[2].to_f64() as f32,
                ]);
            }
        }
        Ok(out)
    }

    /// Shape embedding of a point cloud, without tracking gradients.
    pub fn eval_shape_embedding(&self, cloud_rows: &[f32]) -> Result<Vec<T>> {
        let encoder = self
            .shape_encoder
            .as_ref()
            .ok_or_else(|| Error::Contract("model has no shape encoder".into()))?;
        let n = cloud_rows.len() / 3;
        let mut tape = Tape::new();
        let binding = self.store.bind(&mut tape);
        let data = cloud_rows.iter().map(|&v| T::from_f64(v as f64)).collect();
        let pts = tape.constant(vec![n, 3], data)?;
        let s = encoder.forward(&mut tape, &binding, pts)?;
        Ok(tape.data(s).to_vec())
    }

    /// Latent code for a prepared encoder-resolution image, without
    /// tracking gradients. Conditional mode uses the image encoder; VAE
    /// mode returns the posterior mean.
    pub fn eval_latent(&self, image: &[f32], s_row: Option<&[T]>) -> Result<Vec<T>> {
        let mut tape = Tape::new();
        let binding = self.store.bind(&mut tape);
        let data: Vec<T> = image.iter().map(|&v| T::from_f64(v as f64)).collect();
        let img = tape.constant(vec![1, data.len()], data)?;
        match (&self.image_encoder, &self.vae_encoder) {
            (Some(enc), _) => {
                let z = enc.forward(&mut tape, &binding, img)?;
                Ok(tape.data(z).to_vec())
            }
            (None, Some(enc)) => {
                let s_row = s_row
                    .ok_or_else(|| Error::Contract("vae latent needs a shape embedding".into()))?;
                let s = tape.constant(vec![1, self.config.s_dim], s_row.to_vec())?;
                let (mu, _) = enc.forward(&mut tape, &binding, img, s)?;
                Ok(tape.data(mu).to_vec())
            }
            (None, None) => Err(Error::Contract(
                "overfit-mode model has no image pathway".into(),
            )),
        }
    }
}

/// Downsample a rendered image to the encoder resolution by box averaging.
pub fn prepare_encoder_input(
    image: &[f32],
    width: usize,
    height: usize,
    encoder_res: usize,
) -> Result<Vec<f32>> {
    if width == encoder_res && height == encoder_res {
        return Ok(image.to_vec());
    }
    if width % encoder_res != 0 || height != width {
        return Err(Error::Contract(format!(
            "cannot reduce {width}x{height} image to encoder resolution {encoder_res}"
        )));
    }
    crate::raster::dataset::area_downsample(image, width, height, width / encoder_res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameter_field_outputs_mid_gray() {
        let mut config = ModelConfig::overfit();
        config.blocks = 2;
        config.hidden = 16;
        let mut model = TextureFieldModel::<f32>::build(config, 1).unwrap();
        // zero every parameter
        for idx in 0..model.store.len() {
            let id = crate::autodiff::ParamId(idx);
            for v in model.store.get_mut(id).data_mut() {
                *v = 0.0;
            }
        }
        let colors = model
            .eval_colors(&[[0.1, -0.2, 0.3], [0.5, 0.5, -0.5]], &[], &[])
            .unwrap();
        for c in colors {
            assert_eq!(c, [0.5, 0.5, 0.5]);
        }
    }

    #[test]
    fn permuting_points_permutes_field_output_rows() {
        let mut config = ModelConfig::overfit();
        config.blocks = 2;
        config.hidden = 16;
        let model = TextureFieldModel::<f64>::build(config, 7).unwrap();
        let pts = [[0.1f32, 0.2, 0.3], [-0.4, 0.0, 0.2], [0.3, -0.3, 0.1]];
        let fwd = model.eval_colors(&pts, &[], &[]).unwrap();
        let rev: Vec<[f32; 3]> = model
            .eval_colors(&[pts[2], pts[0], pts[1]], &[], &[])
            .unwrap();
        assert_eq!(fwd[0], rev[1]);
        assert_eq!(fwd[1], rev[2]);
        assert_eq!(fwd[2], rev[0]);
    }

    #[test]
    fn field_outputs_stay_strictly_inside_unit_interval() {
        let mut config = ModelConfig::overfit();
        config.blocks = 3;
        config.hidden = 32;
        let model = TextureFieldModel::<f32>::build(config, 3).unwrap();
        let pts: Vec<[f32; 3]> = (0..64)
            .map(|i| {
                let t = i as f32 / 64.0 - 0.5;
                [t, t * 2.0 % 0.5, -t]
            })
            .collect();
        for c in model.eval_colors(&pts, &[], &[]).unwrap() {
            for ch in c {
                assert!(ch > 0.0 && ch < 1.0);
            }
        }
    }

    #[test]
    fn shape_encoder_is_exactly_permutation_invariant() {
        let mut config = ModelConfig::conditional();
        config.blocks = 1;
        config.hidden = 8;
        config.s_dim = 12;
        config.z_dim = 4;
        config.encoder_res = 4;
        config.encoder_hidden = 8;
        config.pointnet_hidden = 8;
        let model = TextureFieldModel::<f32>::build(config, 5).unwrap();
        let cloud: Vec<f32> = vec![
            0.1, 0.2, 0.3, //
            -0.4, 0.0, 0.2, //
            0.3, -0.3, 0.1, //
            0.0, 0.5, -0.5,
        ];
        let mut shuffled = Vec::new();
        for i in [2usize, 0, 3, 1] {
            shuffled.extend_from_slice(&cloud[i * 3..i * 3 + 3]);
        }
        let a = model.eval_shape_embedding(&cloud).unwrap();
        let b = model.eval_shape_embedding(&shuffled).unwrap();
        assert_eq!(a, b, "embedding must be bitwise identical under permutation");
        // duplicating every point leaves the max pool unchanged
        let mut doubled = cloud.clone();
        doubled.extend_from_slice(&cloud);
        let c = model.eval_shape_embedding(&doubled).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn model_config_round_trips() {
        let dir = std::env::temp_dir().join("texf_model_cfg");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model_config.txt");
        let config = ModelConfig::vae();
        config.write(&path).unwrap();
        assert_eq!(ModelConfig::read(&path).unwrap(), config);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn save_load_preserves_outputs() {
        let mut config = ModelConfig::overfit();
        config.blocks = 2;
        config.hidden = 16;
        let model = TextureFieldModel::<f32>::build(config, 11).unwrap();
        let dir = std::env::temp_dir().join("texf_model_save");
        model.save(&dir).unwrap();
        let loaded = TextureFieldModel::<f32>::load(&dir).unwrap();
        let pts = [[0.2f32, -0.1, 0.4]];
        assert_eq!(
            model.eval_colors(&pts, &[], &[]).unwrap(),
            loaded.eval_colors(&pts, &[], &[]).unwrap()
        );
        std::fs::remove_dir_all(&dir).ok();
    }
}
