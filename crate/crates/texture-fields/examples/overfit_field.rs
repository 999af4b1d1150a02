//! Representation power: overfit the field to one procedurally colored
//! mesh and measure held-out-view quality against the rasterized ground
//! truth.
//!
//! Run with: cargo run --example overfit_field [iterations]

use std::path::PathBuf;
use texture_fields::eval::{mean_l1_masked, render_field, ssim};
use texture_fields::geometry::{normalize_mesh, primitives, save_ply};
use texture_fields::nets::ModelConfig;
use texture_fields::raster::dataset::{generate_dataset, GenOptions};
use texture_fields::raster::views::sample_views;
use texture_fields::raster::{rasterize, DEFAULT_BACKGROUND};
use texture_fields::train::{train, TrainConfig};

fn main() -> texture_fields::Result<()> {
    let iterations: usize = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(800);
    let out = PathBuf::from("texf_out/overfit_field");
    std::fs::create_dir_all(&out).ok();

    // six crisp color regions on a cube
    let mesh = primitives::six_color_cube(4);
    let mesh_path = out.join("cube.ply");
    save_ply(&mesh_path, &mesh)?;

    println!("rendering the training set...");
    let opts = GenOptions {
        views: 40,
        resolution: 128,
        seed: 7,
        ..Default::default()
    };
    let data_dir = out.join("data");
    let manifest = generate_dataset(
        &[(mesh_path.display().to_string(), mesh.clone())],
        &opts,
        &data_dir,
    )?;

    let model_config = ModelConfig {
        blocks: 2,
        ..ModelConfig::overfit()
    };
    let train_config = TrainConfig {
        iterations,
        seed: 7,
        batch_size: 4,
        pixel_cap: 512,
        ..Default::default()
    };
    println!("training for {iterations} steps...");
    let started = std::time::Instant::now();
    let run = train(&manifest, model_config, &train_config, Some(&out.join("model")), |r| {
        if r.step % 100 == 0 {
            println!("  step {:>5}  loss {:.3}", r.step, r.loss);
        }
    })?;
    println!("trained in {:.1}s", started.elapsed().as_secs_f64());

    // held-out views use a different camera seed than training
    let normalized = normalize_mesh(&mesh)?;
    let held_out = sample_views(5, (1.2, 2.0), 1007, 128, 0.45)?;
    let mut ssim_sum = 0.0;
    let mut l1_sum = 0.0;
    for (i, cam) in held_out.iter().enumerate() {
        let target = rasterize(&normalized, cam, DEFAULT_BACKGROUND)?;
        let render = render_field(&run.model, &normalized, cam, &[], &[], DEFAULT_BACKGROUND)?;
        let s = ssim(&render.image, &target.image, 128, 128)?;
        let l = mean_l1_masked(&render.image, &target.image, &target.mask)?;
        ssim_sum += s;
        l1_sum += l;
        texture_fields::raster::dataset::save_png(
            &out.join(format!("held_out_{i}.png")),
            &render.image,
            128,
            128,
        )?;
    }
    println!(
        "held-out mean SSIM {:.4}, foreground mean-l1 {:.4}",
        ssim_sum / held_out.len() as f64,
        l1_sum / held_out.len() as f64
    );
    println!("renders written to {}", out.display());
    Ok(())
}
