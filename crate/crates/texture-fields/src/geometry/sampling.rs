//! Area-weighted uniform surface sampling.

use super::mesh::Mesh;
use super::vec::Vec3;
use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Points sampled uniformly over a mesh surface, with barycentrically
/// interpolated colors.
#[derive(Debug, Clone)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub colors: Vec<Vec3>,
    /// identifier of the originating mesh (path or synthetic tag)
    pub source: String,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Row-major [N,3] f32 buffer for network input.
    pub fn to_rows_f32(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.points.len() * 3);
        for p in &self.points {
            out.push(p.x as f32);
            out.push(p.y as f32);
            out.push(p.z as f32);
        }
        out
    }
}

/// Sample a point uniformly inside a triangle via the square-root trick.
fn barycentric_uniform(rng: &mut ChaCha12Rng) -> (f64, f64, f64) {
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    let su = u.sqrt();
    (1.0 - su, su * (1.0 - v), su * v)
}

/// Faces are chosen with probability proportional to area; positions and
/// colors interpolate barycentrically. Deterministic for a fixed seed.
pub fn sample_surface(mesh: &Mesh, n: usize, seed: u64, source: &str) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Contract("sample_surface with n = 0".into()));
    }
    let areas: Vec<f64> = (0..mesh.faces.len()).map(|f| mesh.face_area(f)).collect();
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain(
            "cannot sample a mesh whose faces are all degenerate".into(),
        ));
    }
    let mut cumulative = Vec::with_capacity(areas.len());
    let mut acc = 0.0;
    for a in &areas {
        acc += a;
        cumulative.push(acc);
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    for _ in 0..n {
        let r: f64 = rng.gen::<f64>() * total;
        let face = cumulative.partition_point(|&c| c <= r).min(areas.len() - 1);
        let [a, b, c] = mesh.face_vertices(face);
        let [ca, cb, cc] = mesh.face_colors(face);
        let (wa, wb, wc) = barycentric_uniform(&mut rng);
        points.push(a.scale(wa) + b.scale(wb) + c.scale(wc));
        colors.push(ca.scale(wa) + cb.scale(wb) + cc.scale(wc));
    }
    Ok(PointCloud {
        points,
        colors,
        source: source.to_string(),
    })
}

/// Distance from a point to the plane of face `f`.
pub fn plane_distance(mesh: &Mesh, f: usize, p: Vec3) -> f64 {
    let [a, b, c] = mesh.face_vertices(f);
    let n = (b - a).cross(c - a);
    let nn = n.norm();
    if nn == 0.0 {
        return f64::INFINITY;
    }
    ((p - a).dot(n) / nn).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::DEFAULT_GRAY;
    use crate::geometry::vec::vec3;

    fn triangle() -> Mesh {
        Mesh::new(
            vec![vec3(0.0, 0.0, 1.0), vec3(1.0, 0.0, 1.0), vec3(0.0, 1.0, 1.0)],
            vec![DEFAULT_GRAY; 3],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn samples_lie_on_the_face_plane() {
        let mesh = triangle();
        let cloud = sample_surface(&mesh, 200, 9, "tri").unwrap();
        for &p in &cloud.points {
            assert!(plane_distance(&mesh, 0, p) < 1e-5);
        }
    }

    #[test]
    fn single_sample_returns_exactly_one_point() {
        let cloud = sample_surface(&triangle(), 1, 3, "tri").unwrap();
        assert_eq!(cloud.len(), 1);
    }

    #[test]
    fn area_weighting_two_triangles() {
        // areas 1 and 3: expect 75% of samples on the larger face
        let mesh = Mesh::new(
            vec![
                // right triangle with legs 2 and 1 -> area 1
                vec3(0.0, 0.0, 0.0),
                vec3(2.0, 0.0, 0.0),
                vec3(0.0, 1.0, 0.0),
                // right triangle with legs 2 and 3 -> area 3
                vec3(10.0, 0.0, 0.0),
                vec3(12.0, 0.0, 0.0),
                vec3(10.0, 3.0, 0.0),
            ],
            vec![DEFAULT_GRAY; 6],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        assert!((mesh.face_area(0) - 1.0).abs() < 1e-12);
        assert!((mesh.face_area(1) - 3.0).abs() < 1e-12);
        let n = 10_000;
        let cloud = sample_surface(&mesh, n, 7, "two").unwrap();
        let on_large = cloud.points.iter().filter(|p| p.x >= 5.0).count();
        let fraction = on_large as f64 / n as f64;
        assert!(
            (fraction - 0.75).abs() <= 0.02,
            "fraction on large triangle: {fraction}"
        );
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let mesh = triangle();
        let a = sample_surface(&mesh, 50, 42, "tri").unwrap();
        let b = sample_surface(&mesh, 50, 42, "tri").unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.colors, b.colors);
    }

    #[test]
    fn degenerate_faces_rejected() {
        let mesh = Mesh::new(
            vec![vec3(0.0, 0.0, 0.0), vec3(1.0, 1.0, 1.0), vec3(2.0, 2.0, 2.0)],
            vec![DEFAULT_GRAY; 3],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            sample_surface(&mesh, 10, 1, "degenerate"),
            Err(Error::Domain(_))
        ));
    }
}
