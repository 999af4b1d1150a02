//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `--nocapture`). Thresholds and tolerances are pinned
//! here, not tuned elsewhere.

mod common;

use common::{central_difference, grad_close, FD_STEP};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::path::{Path, PathBuf};
use std::time::Instant;
use tempfile::TempDir;
use texture_fields::autodiff::{ParamId, Tape};
use texture_fields::cli;
use texture_fields::eval::{
    build_color_voxel_grid, mean_l1_masked, render_field, render_voxel_grid, ssim, ColorVoxelGrid,
};
use texture_fields::geometry::{normalize_mesh, primitives, save_ply, vec3, Mesh, Vec3};
use texture_fields::nets::{Mode, ModelConfig, TextureFieldModel};
use texture_fields::raster::dataset::{generate_dataset, DatasetManifest, GenOptions};
use texture_fields::raster::views::sample_views;
use texture_fields::raster::{rasterize, DEFAULT_BACKGROUND};
use texture_fields::train::{
    conditional_loss, draw_batch, interpolate_latent, kl_standard_normal, sample_prior, train,
    vae_loss, Batch, LoadedDataset, TrainConfig,
};

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

// ── criterion 1: gradient correctness ─────────────────────────────────

fn fd_values(n: usize, salt: u64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let h = (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt;
            let v = ((h >> 11) as f64) / ((1u64 << 53) as f64) * 1.6 - 0.8;
            if v.abs() < 0.05 {
                v + 0.2
            } else {
                v
            }
        })
        .collect()
}

/// FD-check d(loss)/d(leaf) for a unary graph builder over a [2,4] input.
fn check_primitive(
    name: &str,
    build: impl Fn(&mut Tape<f64>, texture_fields::autodiff::NodeId) -> texture_fields::autodiff::NodeId,
) {
    use texture_fields::autodiff::Tensor;
    let x0 = fd_values(8, name.len() as u64 * 131);
    let shape = vec![2usize, 4];
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::from_vec(shape.clone(), x0.clone()).unwrap().with_grad());
    let y = build(&mut tape, x);
    let w = tape
        .constant(tape.shape(y).to_vec(), fd_values(tape.value(y).numel(), 977))
        .unwrap();
    let prod = tape.mul(y, w).unwrap();
    let loss = tape.sum_all(prod).unwrap();
    tape.backward(loss).unwrap();
    let analytic = tape.grad(x).unwrap().to_vec();
    for i in 0..x0.len() {
        let eval = |data: Vec<f64>| {
            let mut tape = Tape::new();
            let x = tape.leaf(Tensor::from_vec(shape.clone(), data).unwrap());
            let y = build(&mut tape, x);
            let w = tape
                .constant(tape.shape(y).to_vec(), fd_values(tape.value(y).numel(), 977))
                .unwrap();
            let prod = tape.mul(y, w).unwrap();
            let loss = tape.sum_all(prod).unwrap();
            tape.data(loss)[0]
        };
        let mut plus = x0.clone();
        plus[i] += FD_STEP;
        let mut minus = x0.clone();
        minus[i] -= FD_STEP;
        let numeric = (eval(plus) - eval(minus)) / (2.0 * FD_STEP);
        assert!(
            grad_close(analytic[i], numeric, 1e-3),
            "primitive {name} entry {i}: analytic {} vs numeric {numeric}",
            analytic[i]
        );
    }
}

fn tiny_batch(objects: usize, with_images: bool, with_clouds: bool, seed: u64) -> Batch {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut elements = Vec::new();
    for object in 0..objects {
        let n = 4;
        let points: Vec<f32> = (0..n * 3).map(|_| rng.gen range()).collect();
        let targets: Vec<f32> = (0..n * 3).map(|_| rng.gen::<f32>()).collect();
        elements.push(texture_fields::train::BatchElement {
            object,
            points,
            targets,
            scale: 1.0 + object as f64 * 0.5,
            cloud: with_clouds.then(|| (0..8 * 3).map(|_| rng.gen::<f32>() - 0.5).collect()),
            image: with_images.then(|| (0..4 * 4 * 3).map(|_| rng.gen::<f32>()).collect()),
        });
    }
    Batch { elements }
}

fn tiny_model_config(mode: Mode) -> ModelConfig {
    let mut config = match mode {
        Mode::Overfit => ModelConfig::overfit(),
        Mode::Conditional => ModelConfig::conditional(),
        Mode::Vae => ModelConfig::vae(),
    };
    config.blocks = 2;
    config.hidden = 8;
    if mode != Mode::Overfit {
        config.s_dim = 6;
        config.z_dim = 4;
    }
    config.encoder_res = 4;
    config.encoder_hidden = 8;
    config.pointnet_hidden = 6;
    config.shape_points = 8;
    config
}

/// FD over a sample of entries of every parameter against the analytic
/// gradient of the full pipeline loss.
fn end_to_end_gradcheck(mode: Mode, seed: u64) {
    let model = TextureFieldModel::<f64>::build(tiny_model_config(mode), seed).unwrap();
    let batch = tiny_batch(2, mode != Mode::Overfit, mode != Mode::Overfit, seed ^ 7);
    let eps = fd_values(2 * model.config.z_dim, 55);

    let loss_of = |model: &TextureFieldModel<f64>| -> f64 {
        let mut tape = Tape::new();
        let binding = model.store.bind(&mut tape);
        let node = match mode {
            Mode::Vae => {
                vae_loss(&mut tape, &binding, model, &batch, &eps, 1.0)
                    .unwrap()
                    .loss
            }
            _ => conditional_loss(&mut tape, &binding, model, &batch).unwrap(),
        };
        tape.data(node)[0]
    };

    // analytic gradients
    let mut model = model;
    {
        let mut tape = Tape::new();
        let binding = model.store.bind(&mut tape);
        let node = match mode {
            Mode::Vae => {
                vae_loss(&mut tape, &binding, &model, &batch, &eps, 1.0)
                    .unwrap()
                    .loss
            }
            _ => conditional_loss(&mut tape, &binding, &model, &batch).unwrap(),
        };
        tape.backward(node).unwrap();
        model.store.write_grads(&tape, &binding).unwrap();
    }

    let mut checked = 0usize;
    let mut groups_with_signal = 0usize;
    for idx in 0..model.store.len() {
        let id = ParamId::from_index(idx);
        let numel = model.store.get(id).numel();
        if numel == 0 {
            continue;
        }
        let grad = model.store.get(id).grad().map(<[f64]>::to_vec);
        let grad = grad.unwrap_or_else(|| vec![0.0; numel]);
        if grad.iter().any(|g| g.abs() > 1e-12) {
            groups_with_signal += 1;
        }
        // up to 4 spread-out entries per parameter
        let stride = (numel / 4).max(1);
        let mut store = model.store.clone();
        for entry in (0..numel).step_by(stride) {
            let numeric = central_difference(&mut store, idx, entry, |s| {
                let mut probe = model.clone();
                probe.store = s.clone();
                loss_of(&probe)
            });
            assert!(
                grad_close(grad[entry], numeric, 1e-3),
                "{} entry {entry}: analytic {} vs numeric {numeric}",
                model.store.name(id),
                grad[entry]
            );
            checked += 1;
        }
    }
    assert!(checked > 20, "end-to-end check exercised {checked} entries");
    assert!(
        groups_with_signal > model.store.len() / 2,
        "gradient flows into most parameter groups"
    );
}

#[test]
fn criterion_1_gradient_correctness() {
    let started = Instant::now();
    check_primitive("relu", |t, x| t.relu(x));
    check_primitive("sigmoid", |t, x| t.sigmoid(x));
    check_primitive("exp", |t, x| t.exp(x));
    check_primitive("abs", |t, x| t.abs(x));
    check_primitive("scale", |t, x| t.scale(x, -1.3));
    check_primitive("add_const", |t, x| t.add_const(x, 0.4));
    check_primitive("affine", |t, x| {
        let w = t.constant(vec![4, 3], fd_values(12, 5)).unwrap();
        let b = t.constant(vec![3], fd_values(3, 6)).unwrap();
        t.affine(x, w, b).unwrap()
    });
    check_primitive("matmul", |t, x| {
        let w = t.constant(vec![4, 2], fd_values(8, 7)).unwrap();
        t.matmul(x, w).unwrap()
    });
    check_primitive("add", |t, x| {
        let o = t.constant(vec![2, 4], fd_values(8, 8)).unwrap();
        t.add(x, o).unwrap()
    });
    check_primitive("sub", |t, x| {
        let o = t.constant(vec![2, 4], fd_values(8, 9)).unwrap();
        t.sub(x, o).unwrap()
    });
    check_primitive("mul", |t, x| {
        let o = t.constant(vec![2, 4], fd_values(8, 10)).unwrap();
        t.mul(x, o).unwrap()
    });
    check_primitive("add_broadcast_row", |t, x| {
        let v = t.constant(vec![4], fd_values(4, 11)).unwrap();
        t.add_broadcast_row(x, v).unwrap()
    });
    check_primitive("concat_cols", |t, x| {
        let o = t.constant(vec![2, 2], fd_values(4, 12)).unwrap();
        t.concat_cols(x, o).unwrap()
    });
    check_primitive("concat_rows", |t, x| {
        let o = t.constant(vec![1, 4], fd_values(4, 13)).unwrap();
        t.concat_rows(&[x, o]).unwrap()
    });
    check_primitive("slice_rows", |t, x| t.slice_rows(x, 1, 1).unwrap());
    check_primitive("max_axis0", |t, x| t.max_axis(x, 0).unwrap());
    check_primitive("max_axis1", |t, x| t.max_axis(x, 1).unwrap());
    check_primitive("sum_axis0", |t, x| t.sum_axis(x, 0).unwrap());
    check_primitive("mean_axis1", |t, x| t.mean_axis(x, 1).unwrap());
    check_primitive("sum_all", |t, x| t.sum_all(x).unwrap());
    check_primitive("mean_all", |t, x| t.mean_all(x).unwrap());

    end_to_end_gradcheck(Mode::Conditional, 101);
    end_to_end_gradcheck(Mode::Vae, 202);

    let elapsed = started.elapsed().as_secs_f64();
    verdict(
        "criterion 1 (gradient correctness)",
        elapsed <= 120.0,
        &format!("all primitives + conditional and vae pipelines, {elapsed:.1}s <= 120s"),
    );
}

// ── criteria 2 + 3: representation power and the voxel comparison ──────

#[test]
fn criterion_2_and_3_representation_power_vs_voxels() {
    let started = Instant::now();
    let tmp = TempDir::new().unwrap();
    let mesh = primitives::six_color_cube(4);
    let mesh_path = tmp.path().join("cube.ply");
    save_ply(&mesh_path, &mesh).unwrap();

    // 100 training views at 128^2
    let opts = GenOptions {
        views: 100,
        resolution: 128,
        seed: 11,
        ..Default::default()
    };
    let data_dir = tmp.path().join("data");
    let manifest = generate_dataset(
        &[(mesh_path.display().to_string(), mesh.clone())],
        &opts,
        &data_dir,
    )
    .unwrap();

    let model_config = ModelConfig {
        blocks: 4,
        hidden: 96,
        ..ModelConfig::overfit()
    };
    let train_config = TrainConfig {
        iterations: 3000,
        seed: 11,
        batch_size: 4,
        pixel_cap: 512,
        lr: 1e-3,
        ..Default::default()
    };
    let run = train(&manifest, model_config, &train_config, None, |_| {}).unwrap();

    // held-out views: fresh camera seed, same resolution
    let normalized = normalize_mesh(&mesh).unwrap();
    let held_out = sample_views(10, (1.2, 2.0), 9911, 128, 0.45).unwrap();
    let mut field_ssim = 0.0;
    let mut field_l1_fg = 0.0;
    for cam in &held_out {
        let target = rasterize(&normalized, cam, DEFAULT_BACKGROUND).unwrap();
        let render =
            render_field(&run.model, &normalized, cam, &[], &[], DEFAULT_BACKGROUND).unwrap();
        field_ssim += ssim(&render.image, &target.image, 128, 128).unwrap();
        field_l1_fg += mean_l1_masked(&render.image, &target.image, &target.mask).unwrap();
    }
    field_ssim /= held_out.len() as f64;
    field_l1_fg /= held_out.len() as f64;
    let elapsed = started.elapsed().as_secs_f64();

    verdict(
        "criterion 2 (representation power)",
        field_ssim >= 0.85 && field_l1_fg <= 0.05 && elapsed <= 45.0 * 60.0,
        &format!(
            "held-out ssim {field_ssim:.4} >= 0.85, foreground l1 {field_l1_fg:.4} <= 0.05, {elapsed:.0}s <= 2700s"
        ),
    );

    // criterion 3: the same trained field against a 32^3 voxelization
    let param_bytes = run.model.store.total_params() * 4;
    let grid_bytes = ColorVoxelGrid::memory_bytes(32);
    let grid = build_color_voxel_grid(&normalized, 32).unwrap();
    let mut voxel_ssim = 0.0;
    for cam in &held_out {
        let target = rasterize(&normalized, cam, DEFAULT_BACKGROUND).unwrap();
        let render = render_voxel_grid(&grid, cam, DEFAULT_BACKGROUND).unwrap();
        voxel_ssim += ssim(&render.image, &target.image, 128, 128).unwrap();
    }
    voxel_ssim /= held_out.len() as f64;
    verdict(
        "criterion 3 (field vs voxel baseline)",
        param_bytes <= grid_bytes && field_ssim > voxel_ssim,
        &format!(
            "field {param_bytes} bytes <= grid {grid_bytes} bytes; held-out ssim {field_ssim:.4} > voxel {voxel_ssim:.4}"
        ),
    );
}

// ── criteria 4 + 5 dataset: eight two-tone primitives ──────────────────

fn two_tone_primitive_meshes(seed: u64) -> Vec<(String, Mesh)> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let palette = [
        vec3(0.92, 0.12, 0.12),
        vec3(0.10, 0.75, 0.20),
        vec3(0.12, 0.25, 0.92),
        vec3(0.95, 0.85, 0.10),
        vec3(0.85, 0.15, 0.85),
        vec3(0.10, 0.80, 0.85),
        vec3(0.95, 0.55, 0.10),
        vec3(0.20, 0.20, 0.20),
    ];
    let mut meshes = Vec::new();
    for i in 0..8usize {
        let mut mesh = match i % 4 {
            0 => primitives::six_color_cube(2),
            1 => primitives::uv_sphere(0.5, 10, 14),
            2 => primitives::cylinder(0.35, 1.0, 14),
            _ => primitives::cone(0.45, 1.0, 14),
        };
        // random split plane through the origin and two distinct tones
        let normal = loop {
            let v = vec3(
                rng.gen::<f64>() * 2.0 - 1.0,
                rng.gen::<f64>() * 2.0 - 1.0,
                rng.gen::<f64>() * 2.0 - 1.0,
            );
            if v.norm() > 0.1 {
                break v;
            }
        };
        let a = rng.gen_range(0..palette.len());
        let b = loop {
            let b = rng.gen_range(0..palette.len());
            if b != a {
                break b;
            }
        };
        primitives::apply_two_tone(&mut mesh, normal, 0.0, palette[a], palette[b]);
        meshes.push((format!("two_tone_{i}"), mesh));
    }
    meshes
}

fn write_two_tone_dataset(dir: &Path, seed: u64) -> DatasetManifest {
    let meshes = two_tone_primitive_meshes(seed);
    let mesh_dir = dir.join("meshes");
    std::fs::create_dir_all(&mesh_dir).unwrap();
    let mut entries = Vec::new();
    for (name, mesh) in &meshes {
        let path = mesh_dir.join(format!("{name}.ply"));
        save_ply(&path, mesh).unwrap();
        entries.push((path.display().to_string(), mesh.clone()));
    }
    let opts = GenOptions {
        views: 10,
        resolution: 64,
        seed,
        ..Default::default()
    };
    generate_dataset(&entries, &opts, &dir.join("data")).unwrap()
}

fn small_conditional_config(mode: Mode) -> ModelConfig {
    ModelConfig {
        mode,
        blocks: 4,
        hidden: 96,
        s_dim: 128,
        z_dim: 32,
        encoder_res: 32,
        encoder_hidden: 128,
        pointnet_hidden: 64,
        shape_points: 256,
    }
}

#[test]
fn criterion_4_conditional_transfer() {
    let started = Instant::now();
    let tmp = TempDir::new().unwrap();
    let manifest = write_two_tone_dataset(tmp.path(), 23);

    let train_config = TrainConfig {
        iterations: 1500,
        seed: 23,
        batch_size: 8,
        pixel_cap: 256,
        lr: 1e-3,
        ..Default::default()
    };
    let run = train(
        &manifest,
        small_conditional_config(Mode::Conditional),
        &train_config,
        None,
        |_| {},
    )
    .unwrap();

    // condition on view 0 of each object, evaluate on the remaining views
    let report = cli::evaluate_against_dataset(&run.model, &manifest, 0, 23).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    verdict(
        "criterion 4 (conditional transfer)",
        report.l1_mean <= 0.10 && elapsed <= 90.0 * 60.0,
        &format!(
            "mean l1 {:.4} <= 0.10 over {} disjoint views (fg l1 {:.4}), {elapsed:.0}s <= 5400s",
            report.l1_mean,
            report.view_count(),
            report.l1_fg_mean
        ),
    );
}

#[test]
fn criterion_5_vae_sanity() {
    let tmp = TempDir::new().unwrap();
    let manifest = write_two_tone_dataset(tmp.path(), 23);

    let config = small_conditional_config(Mode::Vae);
    let train_config = TrainConfig {
        iterations: 800,
        seed: 31,
        batch_size: 8,
        pixel_cap: 256,
        lr: 1e-3,
        beta: 1.0,
        ..Default::default()
    };
    let run = train(&manifest, config.clone(), &train_config, None, |_| {}).unwrap();

    // (a) total loss decreased by at least half
    let first = run.log.first().unwrap().loss;
    let last = run.log.last().unwrap().loss;
    let decreased = last <= 0.5 * first;

    // (b) KL finite and positive on a fixed post-training batch
    let dataset = LoadedDataset::load(&manifest, &run.model.config, 31).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    let batch = draw_batch(&dataset, Mode::Vae, 4, 128, &mut rng).unwrap();
    let eps: Vec<f32> = (0..4 * config.z_dim).map(|i| ((i % 7) as f32 - 3.0) / 3.0).collect();
    let kl_value = {
        let mut tape = Tape::new();
        let binding = run.model.store.bind(&mut tape);
        let parts = vae_loss(&mut tape, &binding, &run.model, &batch, &eps, 1.0).unwrap();
        tape.data(parts.kl_sum)[0] as f64
    };
    let kl_ok = kl_value.is_finite() && kl_value > 0.0;

    // (c) prior samples render to valid images
    let mesh = normalize_mesh(&two_tone_primitive_meshes(23)[0].1).unwrap();
    let cloud = texture_fields::geometry::sample_surface(&mesh, config.shape_points, 5, "c5").unwrap();
    let s = run.model.eval_shape_embedding(&cloud.to_rows_f32()).unwrap();
    let cam = sample_views(1, (1.4, 1.8), 99, 64, 0.45).unwrap().remove(0);
    let mut prior_ok = true;
    for seed in 0..3u64 {
        let z = sample_prior(config.z_dim, seed).unwrap();
        let render = render_field(&run.model, &mesh, &cam, &s, &z, DEFAULT_BACKGROUND).unwrap();
        prior_ok &= render.image.iter().all(|&v| (0.0..=1.0).contains(&v) && v.is_finite());
    }

    // (d) 5-step interpolation between two encoded objects renders cleanly
    let view_a = manifest.views_of(0)[0];
    let view_b = manifest.views_of(1)[0];
    let encode = |view: &texture_fields::raster::dataset::ManifestView| -> Vec<f32> {
        let sample = manifest.load_view(view).unwrap();
        let prepared = texture_fields::nets::prepare_encoder_input(
            &sample.image,
            sample.width(),
            sample.height(),
            config.encoder_res,
        )
        .unwrap();
        run.model.eval_latent(&prepared, Some(&s)).unwrap()
    };
    let za = encode(view_a);
    let zb = encode(view_b);
    let path = interpolate_latent(&za, &zb, 5).unwrap();
    let mut interp_ok = path.len() == 5;
    for z in &path {
        let render = render_field(&run.model, &mesh, &cam, &s, z, DEFAULT_BACKGROUND).unwrap();
        interp_ok &= render.image.iter().all(|&v| (0.0..=1.0).contains(&v) && v.is_finite());
    }

    verdict(
        "criterion 5 (vae sanity)",
        decreased && kl_ok && prior_ok && interp_ok,
        &format!(
            "loss {first:.2} -> {last:.2} (>=50% drop: {decreased}), kl {kl_value:.3} > 0: {kl_ok}, prior renders valid: {prior_ok}, 5-step interpolation valid: {interp_ok}"
        ),
    );
}

// ── criterion 6: geometry oracles ───────────────────────────────────────

#[test]
fn criterion_6_geometry_oracles() {
    // project-unproject identity over a camera/point sweep
    let mut max_err: f64 = 0.0;
    for (i, cam) in sample_views(16, (1.2, 2.0), 61, 64, 0.45)
        .unwrap()
        .iter()
        .enumerate()
    {
        for j in 0..8 {
            let p = vec3(
                ((i * 7 + j) % 9) as f64 / 9.0 - 0.45,
                ((i * 5 + j * 3) % 11) as f64 / 11.0 - 0.45,
                ((i * 3 + j * 5) % 13) as f64 / 13.0 - 0.45,
            );
            let ([u, v], d) = cam.project(p).unwrap();
            let back = cam.unproject([u, v], d).unwrap();
            max_err = max_err.max((back - p).norm());
        }
    }
    let projection_ok = max_err <= 1e-5;

    // rasterized depth of an axis-aligned plane matches the analytic value
    let c = 1.85;
    let plane = Mesh::new(
        vec![
            vec3(-3.0, -3.0, c),
            vec3(3.0, -3.0, c),
            vec3(3.0, 3.0, c),
            vec3(-3.0, 3.0, c),
        ],
        vec![vec3(0.5, 0.5, 0.5); 4],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .unwrap();
    let cam = texture_fields::geometry::Camera::new(
        texture_fields::geometry::Camera::intrinsics(16.0, 32, 32),
        texture_fields::geometry::Mat3::IDENTITY,
        Vec3::ZERO,
        32,
        32,
    )
    .unwrap();
    let out = rasterize(&plane, &cam, DEFAULT_BACKGROUND).unwrap();
    let depth_ok = out.foreground_count() > 0
        && out
            .depth
            .iter()
            .zip(&out.mask)
            .all(|(&d, &m)| !m || (d - c as f32).abs() <= 1e-4);

    // area weighting: two triangles of area 1 and 3
    let two = Mesh::new(
        vec![
            vec3(0.0, 0.0, 0.0),
            vec3(2.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(10.0, 0.0, 0.0),
            vec3(12.0, 0.0, 0.0),
            vec3(10.0, 3.0, 0.0),
        ],
        vec![vec3(0.5, 0.5, 0.5); 6],
        vec![[0, 1, 2], [3, 4, 5]],
    )
    .unwrap();
    let cloud = texture_fields::geometry::sample_surface(&two, 10_000, 7, "areas").unwrap();
    let fraction = cloud.points.iter().filter(|p| p.x >= 5.0).count() as f64 / 10_000.0;
    let area_ok = (fraction - 0.75).abs() <= 0.02;

    // shape-encoder permutation invariance must be exact
    let model = TextureFieldModel::<f32>::build(tiny_model_config(Mode::Conditional), 3).unwrap();
    let cloud_rows: Vec<f32> = (0..8 * 3).map(|i| ((i * 29 % 17) as f32) / 17.0 - 0.5).collect();
    let mut permuted = Vec::new();
    for i in [5usize, 2, 7, 0, 4, 6, 1, 3] {
        permuted.extend_from_slice(&cloud_rows[i * 3..i * 3 + 3]);
    }
    let invariance_ok = model.eval_shape_embedding(&cloud_rows).unwrap()
        == model.eval_shape_embedding(&permuted).unwrap();

    verdict(
        "criterion 6 (geometry oracles)",
        projection_ok && depth_ok && area_ok && invariance_ok,
        &format!(
            "round-trip {max_err:.2e} <= 1e-5, plane depth ok: {depth_ok}, area fraction {fraction:.3} in 0.75±0.02, permutation invariance exact: {invariance_ok}"
        ),
    );
}

// ── criterion 7: exact-value fixtures ───────────────────────────────────

#[test]
fn criterion_7_exact_fixtures() {
    // KL closed forms
    let mut tape = Tape::<f64>::new();
    let mu = tape.constant(vec![1, 1], vec![1.0]).unwrap();
    let ls = tape.constant(vec![1, 1], vec![0.0]).unwrap();
    let kl_a = tape.data(kl_standard_normal(&mut tape, mu, ls).unwrap())[0];
    let mu = tape.constant(vec![1, 1], vec![0.0]).unwrap();
    let ls = tape.constant(vec![1, 1], vec![2.0f64.ln()]).unwrap();
    let kl_b = tape.data(kl_standard_normal(&mut tape, mu, ls).unwrap())[0];
    let kl_ok = (kl_a - 0.5).abs() <= 1e-6 && (kl_b - 0.80685).abs() <= 1e-4;

    // single-pixel l1: prediction (1,1,1) vs target (0,0,0) is exactly 3
    let pred = tape.constant(vec![1, 3], vec![1.0, 1.0, 1.0]).unwrap();
    let target = tape.constant(vec![1, 3], vec![0.0, 0.0, 0.0]).unwrap();
    let l1 = tape.data(texture_fields::train::l1_sum(&mut tape, pred, target).unwrap())[0];
    let l1_ok = l1 == 3.0;

    // zero-parameter field outputs exactly 0.5 per channel
    let mut model = TextureFieldModel::<f32>::build(tiny_model_config(Mode::Overfit), 1).unwrap();
    for idx in 0..model.store.len() {
        let id = ParamId::from_index(idx);
        for v in model.store.get_mut(id).data_mut() {
            *v = 0.0;
        }
    }
    let colors = model
        .eval_colors(&[[0.3, -0.2, 0.1], [0.0, 0.0, 0.0]], &[], &[])
        .unwrap();
    let field_ok = colors.iter().all(|c| *c == [0.5, 0.5, 0.5]);

    verdict(
        "criterion 7 (exact fixtures)",
        kl_ok && l1_ok && field_ok,
        &format!("kl(1,1)={kl_a}, kl(0,2)={kl_b:.5}, pixel l1={l1}, zero field mid-gray: {field_ok}"),
    );
}

// ── criterion 8: determinism from config snapshots ──────────────────────

fn read_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn criterion_8_snapshot_determinism() {
    let tmp = TempDir::new().unwrap();
    let mesh_path = tmp.path().join("cube.ply");
    save_ply(&mesh_path, &primitives::six_color_cube(1)).unwrap();

    // gen-data, then re-run from its snapshot into a second directory
    let d1 = tmp.path().join("gen1");
    let d2 = tmp.path().join("gen2");
    cli::run([
        "texf",
        "gen-data",
        "--mesh",
        &mesh_path.display().to_string(),
        "--views",
        "4",
        "--res",
        "32",
        "--seed",
        "5",
        "--out",
        &d1.display().to_string(),
    ])
    .unwrap();
    cli::run([
        "texf",
        "gen-data",
        "--config",
        &d1.join("run_config.txt").display().to_string(),
        "--out",
        &d2.display().to_string(),
    ])
    .unwrap();
    let manifest_same = read_bytes(&d1.join("manifest.txt")) == read_bytes(&d2.join("manifest.txt"));
    let image_same =
        read_bytes(&d1.join("obj000_view001.png")) == read_bytes(&d2.join("obj000_view001.png"));

    // a short training run, re-run from its snapshot
    let t1 = tmp.path().join("train1");
    let t2 = tmp.path().join("train2");
    cli::run([
        "texf",
        "train-overfit",
        "--data",
        &d1.display().to_string(),
        "--out",
        &t1.display().to_string(),
        "--iters",
        "5",
        "--seed",
        "3",
        "--blocks",
        "1",
        "--hidden",
        "8",
        "--batch",
        "2",
        "--pixel-cap",
        "32",
    ])
    .unwrap();
    cli::run([
        "texf",
        "train-overfit",
        "--config",
        &t1.join("run_config.txt").display().to_string(),
        "--out",
        &t2.display().to_string(),
    ])
    .unwrap();
    let log_same = read_bytes(&t1.join("loss_log.txt")) == read_bytes(&t2.join("loss_log.txt"));
    let params_same = read_bytes(&t1.join("params.texf")) == read_bytes(&t2.join("params.texf"));

    verdict(
        "criterion 8 (snapshot determinism)",
        manifest_same && image_same && log_same && params_same,
        &format!(
            "manifest: {manifest_same}, image bytes: {image_same}, loss log: {log_same}, checkpoint: {params_same}"
        ),
    );
}
