//! Software z-buffer rasterizer producing supervision tuples.
//!
//! Rendering is unlit: vertex colors are albedo, interpolated with
//! perspective-correct barycentric weights. One sample per pixel at the
//! pixel center (u + 0.5), nearest depth wins, no antialiasing. Background
//! pixels carry the configured background color and depth 0; the mask is
//! true exactly where depth > 0.

pub mod dataset;
pub mod views;

use crate::error::{Error, Result};
use crate::geometry::{Camera, Mesh, Vec3};

/// The default background is white, and colors are stored on the 8-bit
/// lattice so PNG round-trips are bitwise.
pub const DEFAULT_BACKGROUND: Vec3 = crate::geometry::vec::vec3(1.0, 1.0, 1.0);

/// One rendered supervision record: color image, depth map, foreground
/// mask, and the camera that produced them.
#[derive(Debug, Clone)]
pub struct ViewSample {
    /// H*W*3 RGB in [0,1], row-major
    pub image: Vec<f32>,
    /// H*W camera-frame z, 0 = background
    pub depth: Vec<f32>,
    /// H*W foreground flags; true iff depth > 0
    pub mask: Vec<bool>,
    pub camera: Camera,
}

impl ViewSample {
    pub fn width(&self) -> usize {
        self.camera.width
    }

    pub fn height(&self) -> usize {
        self.camera.height
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.camera.width + x) * 3;
        [self.image[i], self.image[i + 1], self.image[i + 2]]
    }

    /// Indices of mask-true pixels, row-major order.
    pub fn foreground_pixels(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.camera.width * self.camera.height;
        if self.image.len() != n * 3 || self.depth.len() != n || self.mask.len() != n {
            return Err(Error::Contract(
                "view sample buffers do not match camera resolution".into(),
            ));
        }
        for (i, (&d, &m)) in self.depth.iter().zip(&self.mask).enumerate() {
            if m != (d > 0.0) {
                return Err(Error::Contract(format!(
                    "mask/depth disagree at pixel {i}: depth {d}, mask {m}"
                )));
            }
        }
        Ok(())
    }
}

fn quantize(c: f64) -> f32 {
    ((c.clamp(0.0, 1.0) * 255.0).round() / 255.0) as f32
}

/// Render a normalized mesh. Triangles are drawn in index order; a later
/// triangle wins a pixel only when strictly nearer, so output is
/// deterministic.
pub fn rasterize(mesh: &Mesh, camera: &Camera, background: Vec3) -> Result<ViewSample> {
    let (w, h) = (camera.width, camera.height);
    if w == 0 || h == 0 {
        return Err(Error::Contract("camera with zero resolution".into()));
    }
    let n = w * h;
    let bg = [quantize(background.x), quantize(background.y), quantize(background.z)];
    let mut image = Vec::with_capacity(n * 3);
    for _ in 0..n {
        image.extend_from_slice(&bg);
    }
    let mut zbuf = vec![f64::INFINITY; n];
    let mut depth = vec![0.0f32; n];
    let mut mask = vec![false; n];

    for f in 0..mesh.faces.len() {
        let verts = mesh.face_vertices(f);
        let cols = mesh.face_colors(f);
        // screen positions and camera depths
        let mut sp = [[0.0f64; 2]; 3];
        let mut sz = [0.0f64; 3];
        let mut behind = false;
        for i in 0..3 {
            match camera.project(verts[i]) {
                Ok((uv, d)) => {
                    sp[i] = uv;
                    sz[i] = d;
                }
                Err(_) => {
                    behind = true;
                    break;
                }
            }
        }
        if behind {
            continue; // no near-plane clipping at desk scale
        }
        let area = edge(sp[0], sp[1], sp[2]);
        if area.abs() < 1e-12 {
            continue;
        }
        let min_x = sp.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let max_x = sp.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let min_y = sp.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let max_y = sp.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let x0 = (min_x - 0.5).floor().max(0.0) as usize;
        let x1 = (max_x - 0.5).ceil().min((w - 1) as f64) as usize;
        let y0 = (min_y - 0.5).floor().max(0.0) as usize;
        let y1 = (max_y - 0.5).ceil().min((h - 1) as f64) as usize;
        if x0 > x1 || y0 > y1 || max_x < 0.0 || max_y < 0.0 {
            continue;
        }
        let inv_area = 1.0 / area;
        let inv_z = [1.0 / sz[0], 1.0 / sz[1], 1.0 / sz[2]];
        for y in y0..=y1 {
            for x in x0..=x1 {
                let p = [x as f64 + 0.5, y as f64 + 0.5];
                let w0 = edge(sp[1], sp[2], p) * inv_area;
                let w1 = edge(sp[2], sp[0], p) * inv_area;
                let w2 = edge(sp[0], sp[1], p) * inv_area;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue; // signs normalized by inv_area: inside iff all non-negative
                }
                let interp_inv_z = w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2];
                if interp_inv_z <= 0.0 {
                    continue;
                }
                let z = 1.0 / interp_inv_z;
                let idx = y * w + x;
                if z < zbuf[idx] {
                    zbuf[idx] = z;
                    depth[idx] = z as f32;
                    mask[idx] = true;
                    for c in 0..3 {
                        let num = w0 * [cols[0].x, cols[0].y, cols[0].z][c] * inv_z[0]
                            + w1 * [cols[1].x, cols[1].y, cols[1].z][c] * inv_z[1]
                            + w2 * [cols[2].x, cols[2].y, cols[2].z][c] * inv_z[2];
                        image[idx * 3 + c] = quantize(num * z);
                    }
                }
            }
        }
    }

    Ok(ViewSample {
        image,
        depth,
        mask,
        camera: camera.clone(),
    })
}

fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}
