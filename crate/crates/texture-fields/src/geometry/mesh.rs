//! Indexed triangle meshes with per-vertex colors.

use super::vec::{vec3, Vec3};
use crate::error::{Error, Result};

/// Appearance ground truth is carried per vertex: colors are RGB in [0,1]
/// aligned with `vertices`, interpolated barycentrically inside faces.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub vertex_colors: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>, vertex_colors: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self {
            vertices,
            vertex_colors,
            faces,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertex_colors.len() != self.vertices.len() {
            return Err(Error::Contract(format!(
                "{} vertices but {} colors",
                self.vertices.len(),
                self.vertex_colors.len()
            )));
        }
        for (i, f) in self.faces.iter().enumerate() {
            for &v in f {
                if v >= self.vertices.len() {
                    return Err(Error::Contract(format!(
                        "face {i} references vertex {v}, mesh has {}",
                        self.vertices.len()
                    )));
                }
            }
        }
        for (i, c) in self.vertex_colors.iter().enumerate() {
            for ch in [c.x, c.y, c.z] {
                if !(0.0..=1.0).contains(&ch) || !ch.is_finite() {
                    return Err(Error::Domain(format!(
                        "vertex {i} color channel {ch} outside [0,1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let mut it = self.vertices.iter();
        let first = *it.next()?;
        let mut lo = first;
        let mut hi = first;
        for &v in it {
            lo = lo.min_elem(v);
            hi = hi.max_elem(v);
        }
        Some((lo, hi))
    }

    pub fn face_vertices(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_colors(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertex_colors[a],
            self.vertex_colors[b],
            self.vertex_colors[c],
        ]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_vertices(f);
        (b - a).cross(c - a).norm() * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }
}

/// Center the bounding box at the origin and scale the longest side to 1.
/// Colors are untouched. Idempotent.
pub fn normalize_mesh(mesh: &Mesh) -> Result<Mesh> {
    let (lo, hi) = mesh
        .bounds()
        .ok_or_else(|| Error::Domain("cannot normalize an empty mesh".into()))?;
    let extent = hi - lo;
    let longest = extent.x.max(extent.y).max(extent.z);
    if longest <= 0.0 {
        return Err(Error::Domain(
            "degenerate mesh: zero extent in all axes".into(),
        ));
    }
    let center = (lo + hi).scale(0.5);
    let inv = 1.0 / longest;
    let vertices = mesh
        .vertices
        .iter()
        .map(|&v| (v - center).scale(inv))
        .collect();
    Ok(Mesh {
        vertices,
        vertex_colors: mesh.vertex_colors.clone(),
        faces: mesh.faces.clone(),
    })
}

/// Rigidly transform a mesh (rotation about the origin, then translation).
pub fn transform_mesh(mesh: &Mesh, rot: &super::vec::Mat3, t: Vec3) -> Mesh {
    Mesh {
        vertices: mesh.vertices.iter().map(|&v| rot.mul_vec(v) + t).collect(),
        vertex_colors: mesh.vertex_colors.clone(),
        faces: mesh.faces.clone(),
    }
}

pub const DEFAULT_GRAY: Vec3 = vec3(0.5, 0.5, 0.5);
