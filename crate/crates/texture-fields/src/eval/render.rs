//! Rendering a trained field and colorizing meshes.

use crate::autodiff::Scalar;
use crate::error::Result;
use crate::geometry::{vec3, Camera, Mesh, Vec3};
use crate::nets::TextureFieldModel;
use crate::raster::{rasterize, ViewSample};

/// Render the field through a camera: rasterize the mesh for depth only,
/// unproject every foreground pixel, evaluate the field there, and
/// composite over the background color. Background pixels carry the
/// background color exactly.
pub fn render_field<T: Scalar>(
    model: &TextureFieldModel<T>,
    mesh: &Mesh,
    camera: &Camera,
    s_row: &[T],
    z_row: &[T],
    background: Vec3,
) -> Result<ViewSample> {
    let mut sample = rasterize(mesh, camera, background)?;
    let fg = sample.foreground_pixels();
    if fg.is_empty() {
        return Ok(sample);
    }
    let w = sample.width();
    let mut points = Vec::with_capacity(fg.len());
    for &idx in &fg {
        let (x, y) = (idx % w, idx / w);
        let d = sample.depth[idx] as f64;
        let p = camera.unproject([x as f64 + 0.5, y as f64 + 0.5], d)?;
        points.push([p.x as f32, p.y as f32, p.z as f32]);
    }
    let colors = model.eval_colors(&points, s_row, z_row)?;
    for (&idx, c) in fg.iter().zip(&colors) {
        sample.image[idx * 3] = c[0];
        sample.image[idx * 3 + 1] = c[1];
        sample.image[idx * 3 + 2] = c[2];
    }
    Ok(sample)
}

/// Evaluate the field at every vertex and return the mesh with predicted
/// colors; geometry is untouched.
pub fn colorize_mesh<T: Scalar>(
    model: &TextureFieldModel<T>,
    mesh: &Mesh,
    s_row: &[T],
    z_row: &[T],
) -> Result<Mesh> {
    let points: Vec<[f32; 3]> = mesh
        .vertices
        .iter()
        .map(|v| [v.x as f32, v.y as f32, v.z as f32])
        .collect();
    let colors = model.eval_colors(&points, s_row, z_row)?;
    Ok(Mesh {
        vertices: mesh.vertices.clone(),
        vertex_colors: colors
            .iter()
            .map(|c| vec3(c[0] as f64, c[1] as f64, c[2] as f64))
            .collect(),
        faces: mesh.faces.clone(),
    })
}
