//! Procedural test meshes.
//!
//! Synthetic shapes with controllable colorings stand in for scanned
//! assets: a six-color cube for representation-power runs, and simple
//! primitives with two-tone colorings for conditional/VAE datasets.

use super::mesh::Mesh;
use super::vec::{vec3, Vec3};
use std::f64::consts::PI;

/// Axis-aligned unit cube with each face subdivided `sub` times and colored
/// in one of six saturated colors — six crisp color regions.
pub fn six_color_cube(sub: usize) -> Mesh {
    let sub = sub.max(1);
    let face_colors = [
        vec3(0.9, 0.1, 0.1),
        vec3(0.1, 0.8, 0.15),
        vec3(0.15, 0.2, 0.9),
        vec3(0.95, 0.85, 0.1),
        vec3(0.85, 0.15, 0.85),
        vec3(0.1, 0.8, 0.85),
    ];
    // (origin, edge u, edge v) per face of the [-0.5, 0.5]^3 cube
    let faces: [(Vec3, Vec3, Vec3); 6] = [
        (vec3(-0.5, -0.5, 0.5), vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0)), // +z
        (vec3(0.5, -0.5, -0.5), vec3(-1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0)), // -z
        (vec3(0.5, -0.5, 0.5), vec3(0.0, 0.0, -1.0), vec3(0.0, 1.0, 0.0)), // +x
        (vec3(-0.5, -0.5, -0.5), vec3(0.0, 0.0, 1.0), vec3(0.0, 1.0, 0.0)), // -x
        (vec3(-0.5, 0.5, 0.5), vec3(1.0, 0.0, 0.0), vec3(0.0, 0.0, -1.0)), // +y
        (vec3(-0.5, -0.5, -0.5), vec3(1.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0)), // -y
    ];
    let mut vertices = Vec::new();
    let mut colors = Vec::new();
    let mut tris = Vec::new();
    for (f, (origin, eu, ev)) in faces.iter().enumerate() {
        let base = vertices.len();
        let stride = sub + 1;
        for j in 0..=sub {
            for i in 0..=sub {
                let u = i as f64 / sub as f64;
                let v = j as f64 / sub as f64;
                vertices.push(*origin + eu.scale(u) + ev.scale(v));
                colors.push(face_colors[f]);
            }
        }
        for j in 0..sub {
            for i in 0..sub {
                let a = base + j * stride + i;
                let b = a + 1;
                let c = a + stride;
                let d = c + 1;
                tris.push([a, b, d]);
                tris.push([a, d, c]);
            }
        }
    }
    Mesh::new(vertices, colors, tris).expect("procedural cube is valid")
}

/// UV sphere of the given radius, mid-gray.
pub fn uv_sphere(radius: f64, rings: usize, segments: usize) -> Mesh {
    let rings = rings.max(3);
    let segments = segments.max(3);
    let mut vertices = Vec::new();
    for j in 0..=rings {
        let phi = PI * j as f64 / rings as f64; // 0 at +z pole
        for i in 0..segments {
            let theta = 2.0 * PI * i as f64 / segments as f64;
            vertices.push(vec3(
                radius * phi.sin() * theta.cos(),
                radius * phi.sin() * theta.sin(),
                radius * phi.cos(),
            ));
        }
    }
    let mut tris = Vec::new();
    let idx = |j: usize, i: usize| j * segments + (i % segments);
    for j in 0..rings {
        for i in 0..segments {
            let (a, b) = (idx(j, i), idx(j, i + 1));
            let (c, d) = (idx(j + 1, i), idx(j + 1, i + 1));
            if j > 0 {
                tris.push([a, b, d]);
            }
            if j + 1 < rings {
                tris.push([a, d, c]);
            }
            if j + 1 == rings {
                tris.push([a, b, c]); // bottom fan uses one of the coincident pole vertices
            }
        }
    }
    let colors = vec![super::mesh::DEFAULT_GRAY; vertices.len()];
    Mesh::new(vertices, colors, tris).expect("procedural sphere is valid")
}

/// Closed cylinder along z, mid-gray.
pub fn cylinder(radius: f64, height: f64, segments: usize) -> Mesh {
    let segments = segments.max(3);
    let h = height / 2.0;
    let mut vertices = Vec::new();
    for &z in &[-h, h] {
        for i in 0..segments {
            let theta = 2.0 * PI * i as f64 / segments as f64;
            vertices.push(vec3(radius * theta.cos(), radius * theta.sin(), z));
        }
    }
    let bottom_center = vertices.len();
    vertices.push(vec3(0.0, 0.0, -h));
    let top_center = vertices.len();
    vertices.push(vec3(0.0, 0.0, h));
    let mut tris = Vec::new();
    for i in 0..segments {
        let i2 = (i + 1) % segments;
        let (b0, b1) = (i, i2);
        let (t0, t1) = (segments + i, segments + i2);
        tris.push([b0, b1, t1]);
        tris.push([b0, t1, t0]);
        tris.push([bottom_center, b1, b0]);
        tris.push([top_center, t0, t1]);
    }
    let colors = vec![super::mesh::DEFAULT_GRAY; vertices.len()];
    Mesh::new(vertices, colors, tris).expect("procedural cylinder is valid")
}

/// Cone with apex at +z, closed base, mid-gray.
pub fn cone(radius: f64, height: f64, segments: usize) -> Mesh {
    let segments = segments.max(3);
    let h = height / 2.0;
    let mut vertices = Vec::new();
    for i in 0..segments {
        let theta = 2.0 * PI * i as f64 / segments as f64;
        vertices.push(vec3(radius * theta.cos(), radius * theta.sin(), -h));
    }
    let apex = vertices.len();
    vertices.push(vec3(0.0, 0.0, h));
    let base_center = vertices.len();
    vertices.push(vec3(0.0, 0.0, -h));
    let mut tris = Vec::new();
    for i in 0..segments {
        let i2 = (i + 1) % segments;
        tris.push([i, i2, apex]);
        tris.push([base_center, i2, i]);
    }
    let colors = vec![super::mesh::DEFAULT_GRAY; vertices.len()];
    Mesh::new(vertices, colors, tris).expect("procedural cone is valid")
}

/// Color vertices by which side of the plane `n . x = offset` they fall on.
pub fn apply_two_tone(mesh: &mut Mesh, normal: Vec3, offset: f64, side_a: Vec3, side_b: Vec3) {
    let n = normal.normalized();
    for (v, c) in mesh.vertices.iter().zip(mesh.vertex_colors.iter_mut()) {
        *c = if v.dot(n) >= offset { side_a } else { side_b };
    }
}
