//! Subcommand implementations.

use super::*;
use crate::error::{Error, Result};
use crate::eval::{colorize_mesh, metrics_report, render_field};
use crate::geometry::{load_mesh, normalize_mesh, sample_surface, save_ply, vec3, Mesh, Vec3};
use crate::nets::{prepare_encoder_input, Mode, ModelConfig, TextureFieldModel};
use crate::raster::dataset::{
    derive_seed, generate_dataset, load_png, save_png, DatasetManifest, GenOptions,
};
use crate::raster::views::{sample_views, DEFAULT_FOCAL_FACTOR, DEFAULT_RADIUS_RANGE};
use crate::raster::DEFAULT_BACKGROUND;
use crate::train::{sample_prior, train, TrainConfig};
use std::path::{Path, PathBuf};

fn parse_background(raw: &str) -> Result<Vec3> {
    let vals: Vec<f64> = raw
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Config(format!("bad background component `{t}`")))
        })
        .collect::<Result<_>>()?;
    if vals.len() != 3 {
        return Err(Error::Config(format!(
            "background needs three components, got {}",
            vals.len()
        )));
    }
    Ok(vec3(vals[0], vals[1], vals[2]))
}

fn load_normalized(path: &str) -> Result<Mesh> {
    normalize_mesh(&load_mesh(Path::new(path))?)
}

pub fn gen_data(args: GenDataArgs) -> Result<()> {
    let mut r = Resolver::new("gen-data", &args.config)?;
    let meshes = r.list("mesh", &args.mesh);
    if meshes.is_empty() {
        return Err(Error::Config("missing required flag --mesh".into()));
    }
    let views = r.value("views", args.views, Some(10))?;
    let res = r.value("res", args.res, Some(128))?;
    let seed = r.value("seed", args.seed, Some(0))?;
    let radius_min = r.value("radius_min", args.radius_min, Some(DEFAULT_RADIUS_RANGE.0))?;
    let radius_max = r.value("radius_max", args.radius_max, Some(DEFAULT_RADIUS_RANGE.1))?;
    let focal = r.value("focal", args.focal, Some(DEFAULT_FOCAL_FACTOR))?;
    let background = parse_background(&r.value(
        "background",
        args.background,
        Some("1 1 1".to_string()),
    )?)?;
    let out = r.value("out", args.out.map(display_path), None::<String>)?;
    let out = PathBuf::from(out);
    r.write_snapshot(&out)?;

    let loaded: Vec<(String, Mesh)> = meshes
        .iter()
        .map(|p| Ok((p.clone(), load_mesh(Path::new(p))?)))
        .collect::<Result<_>>()?;
    let opts = GenOptions {
        views,
        resolution: res,
        seed,
        radius_range: (radius_min, radius_max),
        background,
        focal_factor: focal,
    };
    let manifest = generate_dataset(&loaded, &opts, &out)?;
    println!(
        "wrote {} views of {} objects to {}",
        manifest.views.len(),
        manifest.objects.len(),
        out.display()
    );
    Ok(())
}

fn display_path(p: PathBuf) -> String {
    p.display().to_string()
}

pub fn train_cmd(mode: Mode, args: TrainArgs) -> Result<()> {
    let sub = match mode {
        Mode::Overfit => "train-overfit",
        Mode::Conditional => "train-cond",
        Mode::Vae => "train-vae",
    };
    let mut r = Resolver::new(sub, &args.config)?;
    let data = PathBuf::from(r.value("data", args.data.map(display_path), None::<String>)?);
    let out = PathBuf::from(r.value("out", args.out.map(display_path), None::<String>)?);

    let base = match mode {
        Mode::Overfit => ModelConfig::overfit(),
        Mode::Conditional => ModelConfig::conditional(),
        Mode::Vae => ModelConfig::vae(),
    };
    let model_config = ModelConfig {
        mode,
        blocks: r.value("blocks", args.blocks, Some(base.blocks))?,
        hidden: r.value("hidden", args.hidden, Some(base.hidden))?,
        s_dim: r.value("s_dim", args.s_dim, Some(base.s_dim))?,
        z_dim: r.value("z_dim", args.z_dim, Some(base.z_dim))?,
        encoder_res: r.value("encoder_res", args.encoder_res, Some(base.encoder_res))?,
        encoder_hidden: r.value(
            "encoder_hidden",
            args.encoder_hidden,
            Some(base.encoder_hidden),
        )?,
        pointnet_hidden: r.value(
            "pointnet_hidden",
            args.pointnet_hidden,
            Some(base.pointnet_hidden),
        )?,
        shape_points: r.value("points", args.points, Some(base.shape_points))?,
    };
    let train_config = TrainConfig {
        lr: r.value("lr", args.lr, Some(1e-4))?,
        batch_size: r.value("batch", args.batch, Some(8))?,
        pixel_cap: r.value("pixel_cap", args.pixel_cap, Some(1024))?,
        iterations: r.value("iters", args.iters, Some(1000))?,
        seed: r.value("seed", args.seed, Some(0))?,
        beta: r.value("beta", args.beta, Some(1.0))?,
        checkpoint_interval: r.value("checkpoint_interval", args.checkpoint_interval, Some(0))?,
    };
    let progress_every = r.value("progress_every", args.progress_every, Some(0))?;
    r.write_snapshot(&out)?;

    let manifest = DatasetManifest::read(&data)?;
    let started = std::time::Instant::now();
    let output = train(&manifest, model_config, &train_config, Some(&out), |rec| {
        if progress_every > 0 && rec.step % progress_every == 0 {
            eprintln!("[{sub}] {}", rec.to_line());
        }
    })?;
    let elapsed = started.elapsed().as_secs_f64();
    match (output.log.first(), output.log.last()) {
        (Some(first), Some(last)) => println!(
            "{sub}: {} steps in {elapsed:.1}s, loss {} -> {}",
            output.log.len(),
            first.loss,
            last.loss
        ),
        _ => println!("{sub}: 0 steps (initialization checkpoint written)"),
    }
    Ok(())
}

/// Shape-encoder input: a point cloud of the render mesh, sampled with a
/// sub-seed derived the same way training derives object 0's cloud.
fn shape_row(model: &TextureFieldModel<f32>, mesh: &Mesh, seed: u64) -> Result<Vec<f32>> {
    if model.shape_encoder.is_none() {
        return Ok(Vec::new());
    }
    let cloud = sample_surface(
        mesh,
        model.config.shape_points,
        derive_seed(seed, 2000),
        "render",
    )?;
    model.eval_shape_embedding(&cloud.to_rows_f32())
}

/// Latent code per the flags: an encoded condition image wins, then a
/// prior draw, then zeros.
fn latent_row(
    model: &TextureFieldModel<f32>,
    condition_image: Option<&str>,
    z_prior_seed: Option<u64>,
    s_row: &[f32],
) -> Result<Vec<f32>> {
    if let Some(path) = condition_image {
        let (img, w, h) = load_png(Path::new(path))?;
        let prepared = prepare_encoder_input(&img, w, h, model.config.encoder_res)?;
        let s_opt = (!s_row.is_empty()).then_some(s_row);
        return model.eval_latent(&prepared, s_opt);
    }
    if let Some(seed) = z_prior_seed {
        return sample_prior(model.config.z_dim.max(1), seed);
    }
    Ok(vec![0.0; model.config.z_dim])
}

fn load_model(dir: &Path) -> Result<TextureFieldModel<f32>> {
    TextureFieldModel::load(dir)
}

pub fn render_cmd(args: RenderArgs) -> Result<()> {
    let mut r = Resolver::new("render", &args.config)?;
    let model_dir = PathBuf::from(r.value("model_dir", args.model_dir.map(display_path), None::<String>)?);
    let mesh_path = r.value("mesh", args.mesh, None::<String>)?;
    let out = PathBuf::from(r.value("out", args.out.map(display_path), None::<String>)?);
    let cameras = r.list("camera", &args.camera);
    let views = r.value("views", args.views, Some(1))?;
    let res = r.value("res", args.res, Some(256))?;
    let seed = r.value("seed", args.seed, Some(0))?;
    let condition_image = r.optional("condition_image", args.condition_image)?;
    let z_prior_seed = r.optional("z_prior_seed", args.z_prior_seed)?;
    let background = parse_background(&r.value(
        "background",
        args.background,
        Some("1 1 1".to_string()),
    )?)?;
    r.write_snapshot(&out)?;

    let model = load_model(&model_dir)?;
    let mesh = load_normalized(&mesh_path)?;
    let s = shape_row(&model, &mesh, seed)?;
    let z = latent_row(&model, condition_image.as_deref(), z_prior_seed, &s)?;

    let cams = if !cameras.is_empty() {
        cameras
            .iter()
            .map(|p| crate::geometry::Camera::read(Path::new(p)))
            .collect::<Result<Vec<_>>>()?
    } else {
        sample_views(
            views,
            DEFAULT_RADIUS_RANGE,
            derive_seed(seed, 4000),
            res,
            DEFAULT_FOCAL_FACTOR,
        )?
    };
    for (i, cam) in cams.iter().enumerate() {
        let sample = render_field(&model, &mesh, cam, &s, &z, background)?;
        let name = format!("view_{i:03}.png");
        save_png(&out.join(&name), &sample.image, cam.width, cam.height)?;
    }
    println!("rendered {} views to {}", cams.len(), out.display());
    Ok(())
}

/// Render every non-condition view of every object and compare against the
/// dataset images.
pub fn eval_cmd(args: EvalArgs) -> Result<()> {
    let mut r = Resolver::new("eval", &args.config)?;
    let model_dir = PathBuf::from(r.value("model_dir", args.model_dir.map(display_path), None::<String>)?);
    let data = PathBuf::from(r.value("data", args.data.map(display_path), None::<String>)?);
    let out = PathBuf::from(r.value("out", args.out.map(display_path), None::<String>)?);
    let condition_view = r.value("condition_view", args.condition_view, Some(0))?;
    let seed = r.value("seed", args.seed, Some(0))?;
    r.write_snapshot(&out)?;

    let model = load_model(&model_dir)?;
    let manifest = DatasetManifest::read(&data)?;
    let report = evaluate_against_dataset(&model, &manifest, condition_view, seed)?;
    report.write(&out.join("metrics.txt"))?;
    println!(
        "ssim_mean: {}\npsnr_mean: {}\nl1_mean: {}\nl1_fg_mean: {}",
        report.ssim_mean, report.psnr_mean, report.l1_mean, report.l1_fg_mean
    );
    Ok(())
}

/// Shared by `eval` and the acceptance suite: per object, condition on one
/// view (unless overfit) and render the remaining views for comparison.
pub fn evaluate_against_dataset(
    model: &TextureFieldModel<f32>,
    manifest: &DatasetManifest,
    condition_view: usize,
    seed: u64,
) -> Result<crate::eval::MetricsReport> {
    let mut renders = Vec::new();
    let mut targets = Vec::new();
    for entry in &manifest.objects {
        let mesh = manifest.load_object_mesh(entry.id)?;
        let s = if model.shape_encoder.is_some() {
            let cloud = sample_surface(
                &mesh,
                model.config.shape_points,
                derive_seed(seed, 2000 + entry.id as u64),
                &entry.mesh,
            )?;
            model.eval_shape_embedding(&cloud.to_rows_f32())?
        } else {
            Vec::new()
        };
        let object_views = manifest.views_of(entry.id);
        let uses_condition = model.config.mode != Mode::Overfit;
        let z = if uses_condition {
            let cond = object_views
                .iter()
                .find(|v| v.index == condition_view)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "object {} has no view {condition_view} to condition on",
                        entry.id
                    ))
                })?;
            let sample = manifest.load_view(cond)?;
            let prepared = prepare_encoder_input(
                &sample.image,
                sample.width(),
                sample.height(),
                model.config.encoder_res,
            )?;
            let s_opt = (!s.is_empty()).then_some(s.as_slice());
            model.eval_latent(&prepared, s_opt)?
        } else {
            vec![0.0; model.config.z_dim]
        };
        for view in object_views {
            if uses_condition && view.index == condition_view {
                continue;
            }
            let target = manifest.load_view(view)?;
            let render = render_field(model, &mesh, &target.camera, &s, &z, manifest.background)?;
            renders.push(render);
            targets.push(target);
        }
    }
    metrics_report(
        &model.config.mode.as_str().to_string(),
        &renders,
        &targets,
    )
}

pub fn voxel_cmd(args: VoxelArgs) -> Result<()> {
    let mut r = Resolver::new("voxel-baseline", &args.config)?;
    let mesh_path = r.value("mesh", args.mesh, None::<String>)?;
    let resolution = r.value("resolution", args.resolution, Some(128))?;
    let data = r.optional("data", args.data.map(display_path))?;
    let object = r.value("object", args.object, Some(0))?;
    let out = PathBuf::from(r.value("out", args.out.map(display_path), None::<String>)?);
    r.write_snapshot(&out)?;

    let mesh = load_normalized(&mesh_path)?;
    let grid = crate::eval::build_color_voxel_grid(&mesh, resolution)?;
    println!(
        "voxelized at {resolution}^3: {} occupied voxels, dense color memory {} bytes",
        grid.occupied_count(),
        crate::eval::ColorVoxelGrid::memory_bytes(resolution)
    );
    match data {
        Some(dir) => {
            let manifest = DatasetManifest::read(Path::new(&dir))?;
            let mut renders = Vec::new();
            let mut targets = Vec::new();
            for view in manifest.views_of(object) {
                let target = manifest.load_view(view)?;
                let render =
                    crate::eval::render_voxel_grid(&grid, &target.camera, manifest.background)?;
                save_png(
                    &out.join(format!("voxel_view_{:03}.png", view.index)),
                    &render.image,
                    target.width(),
                    target.height(),
                )?;
                renders.push(render);
                targets.push(target);
            }
            let report = metrics_report(&format!("voxel-{resolution}"), &renders, &targets)?;
            report.write(&out.join("metrics.txt"))?;
            println!("ssim_mean: {}", report.ssim_mean);
        }
        None => {
            let cams = sample_views(4, DEFAULT_RADIUS_RANGE, 0, 256, DEFAULT_FOCAL_FACTOR)?;
            for (i, cam) in cams.iter().enumerate() {
                let render = crate::eval::render_voxel_grid(&grid, cam, DEFAULT_BACKGROUND)?;
                save_png(
                    &out.join(format!("voxel_view_{i:03}.png")),
                    &render.image,
                    cam.width,
                    cam.height,
                )?;
            }
        }
    }
    Ok(())
}

pub fn colorize_cmd(args: ColorizeArgs) -> Result<()> {
    let mut r = Resolver::new("colorize", &args.config)?;
    let model_dir = PathBuf::from(r.value("model_dir", args.model_dir.map(display_path), None::<String>)?);
    let mesh_path = r.value("mesh", args.mesh, None::<String>)?;
    let out = PathBuf::from(r.value("out", args.out.map(display_path), None::<String>)?);
    let condition_image = r.optional("condition_image", args.condition_image)?;
    let z_prior_seed = r.optional("z_prior_seed", args.z_prior_seed)?;
    let seed = r.value("seed", args.seed, Some(0))?;
    r.write_snapshot(&out)?;

    let model = load_model(&model_dir)?;
    let mesh = load_normalized(&mesh_path)?;
    let s = shape_row(&model, &mesh, seed)?;
    let z = latent_row(&model, condition_image.as_deref(), z_prior_seed, &s)?;
    let colored = colorize_mesh(&model, &mesh, &s, &z)?;
    let path = out.join("colorized.ply");
    save_ply(&path, &colored)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn latent_interp_cmd(args: LatentInterpArgs) -> Result<()> {
    let mut r = Resolver::new("latent-interp", &args.config)?;
    let model_dir = PathBuf::from(r.value("model_dir", args.model_dir.map(display_path), None::<String>)?);
    let mesh_path = r.value("mesh", args.mesh, None::<String>)?;
    let image_a = r.value("image_a", args.image_a, None::<String>)?;
    let image_b = r.value("image_b", args.image_b, None::<String>)?;
    let steps = r.value("steps", args.steps, Some(5))?;
    let res = r.value("res", args.res, Some(256))?;
    let seed = r.value("seed", args.seed, Some(0))?;
    let out = PathBuf::from(r.value("out", args.out.map(display_path), None::<String>)?);
    r.write_snapshot(&out)?;

    let model = load_model(&model_dir)?;
    let mesh = load_normalized(&mesh_path)?;
    let s = shape_row(&model, &mesh, seed)?;
    let za = latent_row(&model, Some(image_a.as_str()), None, &s)?;
    let zb = latent_row(&model, Some(image_b.as_str()), None, &s)?;
    let path_points = crate::train::interpolate_latent(&za, &zb, steps)?;
    let cam = sample_views(1, DEFAULT_RADIUS_RANGE, derive_seed(seed, 4000), res, DEFAULT_FOCAL_FACTOR)?
        .remove(0);
    for (i, z) in path_points.iter().enumerate() {
        let sample = render_field(&model, &mesh, &cam, &s, z, DEFAULT_BACKGROUND)?;
        save_png(
            &out.join(format!("interp_{i:02}.png")),
            &sample.image,
            cam.width,
            cam.height,
        )?;
    }
    println!("rendered {steps} interpolation steps to {}", out.display());
    Ok(())
}

pub fn latent_transfer_cmd(args: LatentTransferArgs) -> Result<()> {
    let mut r = Resolver::new("latent-transfer", &args.config)?;
    let model_dir = PathBuf::from(r.value("model_dir", args.model_dir.map(display_path), None::<String>)?);
    let source_image = r.value("source_image", args.source_image, None::<String>)?;
    let target_mesh = r.value("target_mesh", args.target_mesh, None::<String>)?;
    let res = r.value("res", args.res, Some(256))?;
    let views = r.value("views", args.views, Some(1))?;
    let seed = r.value("seed", args.seed, Some(0))?;
    let out = PathBuf::from(r.value("out", args.out.map(display_path), None::<String>)?);
    r.write_snapshot(&out)?;

    let model = load_model(&model_dir)?;
    let mesh = load_normalized(&target_mesh)?;
    let s = shape_row(&model, &mesh, seed)?;
    // appearance comes from the source object's view; geometry from the target
    let z = latent_row(&model, Some(source_image.as_str()), None, &s)?;
    let cams = sample_views(
        views,
        DEFAULT_RADIUS_RANGE,
        derive_seed(seed, 4000),
        res,
        DEFAULT_FOCAL_FACTOR,
    )?;
    for (i, cam) in cams.iter().enumerate() {
        let sample = render_field(&model, &mesh, cam, &s, &z, DEFAULT_BACKGROUND)?;
        save_png(
            &out.join(format!("transfer_{i:03}.png")),
            &sample.image,
            cam.width,
            cam.height,
        )?;
    }
    println!("transferred appearance onto {} view(s)", cams.len());
    Ok(())
}
