//! The `texf` command line.
//!
//! Every subcommand accepts `--config <file>` pointing at a previously
//! emitted `run_config.txt`; explicit flags override file values, and the
//! resolved configuration is snapshotted alongside the outputs so any run
//! can be reproduced from its snapshot alone.

mod commands;

pub use commands::evaluate_against_dataset;

use crate::error::{Error, Result};
use crate::kv::KvDoc;
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "texf", version, about = "Continuous texture fields: data generation, training, rendering, evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render a mesh set from random views into a training dataset
    GenData(GenDataArgs),
    /// Fit the field to a single shape (no encoders, z fixed to zero)
    TrainOverfit(TrainArgs),
    /// Train the conditional model (shape + image encoders)
    TrainCond(TrainArgs),
    /// Train the variational model (shape encoder + posterior encoder)
    TrainVae(TrainArgs),
    /// Render a trained field over a mesh
    Render(RenderArgs),
    /// Compare a trained model against dataset views
    Eval(EvalArgs),
    /// Build and render the colored-voxel baseline
    VoxelBaseline(VoxelArgs),
    /// Write a mesh with field-predicted vertex colors
    Colorize(ColorizeArgs),
    /// Render a latent-space interpolation between two encoded images
    LatentInterp(LatentInterpArgs),
    /// Encode one object's view and render it on a different shape
    LatentTransfer(LatentTransferArgs),
}

#[derive(Args, Debug, Default)]
pub struct GenDataArgs {
    /// previously emitted run_config.txt to start from
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// mesh file (.obj or .ply); repeat for multi-object datasets
    #[arg(long)]
    pub mesh: Vec<String>,
    #[arg(long)]
    pub views: Option<usize>,
    /// square image resolution in pixels
    #[arg(long)]
    pub res: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub radius_min: Option<f64>,
    #[arg(long)]
    pub radius_max: Option<f64>,
    /// focal length as a fraction of resolution
    #[arg(long)]
    pub focal: Option<f64>,
    /// background color, three floats like "1 1 1"
    #[arg(long)]
    pub background: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// dataset directory containing manifest.txt
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub pixel_cap: Option<usize>,
    /// KL weight (vae mode)
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub checkpoint_interval: Option<usize>,
    /// residual blocks in the field network
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub s_dim: Option<usize>,
    #[arg(long)]
    pub z_dim: Option<usize>,
    #[arg(long)]
    pub encoder_res: Option<usize>,
    #[arg(long)]
    pub encoder_hidden: Option<usize>,
    #[arg(long)]
    pub pointnet_hidden: Option<usize>,
    /// surface points fed to the shape encoder
    #[arg(long)]
    pub points: Option<usize>,
    /// print a progress line every N steps (0 = silent)
    #[arg(long)]
    pub progress_every: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct RenderArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// directory with model_config.txt and params.texf
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// camera file; repeat for several views (overrides random views)
    #[arg(long)]
    pub camera: Vec<String>,
    #[arg(long)]
    pub views: Option<usize>,
    #[arg(long)]
    pub res: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// encode this image as the latent code
    #[arg(long)]
    pub condition_image: Option<String>,
    /// draw z from the standard normal prior with this seed
    #[arg(long)]
    pub z_prior_seed: Option<u64>,
    #[arg(long)]
    pub background: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// which view of each object conditions the model
    #[arg(long)]
    pub condition_view: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct VoxelArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub mesh: Option<String>,
    /// voxel grid resolution per axis
    #[arg(long)]
    pub resolution: Option<usize>,
    /// dataset whose views to render and compare against
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// object id within the dataset
    #[arg(long)]
    pub object: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ColorizeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub condition_image: Option<String>,
    #[arg(long)]
    pub z_prior_seed: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct LatentInterpArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// mesh to render the interpolated textures on
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long)]
    pub image_a: Option<String>,
    #[arg(long)]
    pub image_b: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub res: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct LatentTransferArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// view of the appearance-source object
    #[arg(long)]
    pub source_image: Option<String>,
    #[arg(long)]
    pub target_mesh: Option<String>,
    #[arg(long)]
    pub res: Option<usize>,
    #[arg(long)]
    pub views: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flag-over-file-over-default resolution that records every resolved
/// value for the run_config.txt snapshot.
pub(crate) struct Resolver {
    doc: Option<KvDoc>,
    snapshot: KvDoc,
}

impl Resolver {
    pub fn new(subcommand: &str, config: &Option<PathBuf>) -> Result<Self> {
        let doc = match config {
            Some(path) => {
                let doc = KvDoc::read(path)?;
                if let Some(sub) = doc.get("subcommand") {
                    if sub != subcommand {
                        return Err(Error::Config(format!(
                            "config snapshot is for `{sub}`, not `{subcommand}`"
                        )));
                    }
                }
                Some(doc)
            }
            None => None,
        };
        let mut snapshot = KvDoc::new();
        snapshot.push("format", "texf-run-config-v1");
        snapshot.push("subcommand", subcommand);
        Ok(Self { doc, snapshot })
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T>
    where
        T: std::str::FromStr + ToString,
    {
        let resolved = match flag {
            Some(v) => v,
            None => match self.doc.as_ref().and_then(|d| d.get(key)) {
                Some(raw) => raw
                    .parse()
                    .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{raw}`")))?,
                None => default
                    .ok_or_else(|| Error::Config(format!("missing required flag --{key}")))?,
            },
        };
        self.snapshot.push(key, resolved.to_string());
        Ok(resolved)
    }

    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: std::str::FromStr + ToString,
    {
        let resolved = match flag {
            Some(v) => Some(v),
            None => match self.doc.as_ref().and_then(|d| d.get(key)) {
                Some(raw) => Some(
                    raw.parse()
                        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{raw}`")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &resolved {
            self.snapshot.push(key, v.to_string());
        }
        Ok(resolved)
    }

    /// Repeatable values (e.g. meshes, cameras): flags win wholesale.
    pub fn list(&mut self, key: &str, flags: &[String]) -> Vec<String> {
        let values: Vec<String> = if !flags.is_empty() {
            flags.to_vec()
        } else {
            self.doc
                .as_ref()
                .map(|d| d.get_all(key).map(str::to_string).collect())
                .unwrap_or_default()
        };
        for v in &values {
            self.snapshot.push(key, v);
        }
        values
    }

    /// Write the snapshot beside the command outputs.
    pub fn write_snapshot(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        self.snapshot.write(&out_dir.join("run_config.txt"))
    }
}

pub fn run<I, S>(args: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(Error::Config(e.to_string())),
    };
    match cli.command {
        Command::GenData(args) => commands::gen_data(args),
        Command::TrainOverfit(args) => commands::train_cmd(crate::nets::Mode::Overfit, args),
        Command::TrainCond(args) => commands::train_cmd(crate::nets::Mode::Conditional, args),
        Command::TrainVae(args) => commands::train_cmd(crate::nets::Mode::Vae, args),
        Command::Render(args) => commands::render_cmd(args),
        Command::Eval(args) => commands::eval_cmd(args),
        Command::VoxelBaseline(args) => commands::voxel_cmd(args),
        Command::Colorize(args) => commands::colorize_cmd(args),
        Command::LatentInterp(args) => commands::latent_interp_cmd(args),
        Command::LatentTransfer(args) => commands::latent_transfer_cmd(args),
    }
}
