//! Random view sampling over the upper hemisphere.

use crate::error::{Error, Result};
use crate::geometry::{vec3, Camera};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Cameras see most of a unit-normalized object across the default radius
/// range with this focal length (in pixels, as a fraction of resolution).
pub const DEFAULT_FOCAL_FACTOR: f64 = 0.45;

/// The radius distribution is a config knob; these are normalized units.
pub const DEFAULT_RADIUS_RANGE: (f64, f64) = (1.2, 2.0);

/// Camera centers are uniform over upper-hemisphere directions (z >= 0)
/// at radii drawn from `radius_range`, looking at the origin with world
/// +z as the up hint. Deterministic per seed.
pub fn sample_views(
    n: usize,
    radius_range: (f64, f64),
    seed: u64,
    resolution: usize,
    focal_factor: f64,
) -> Result<Vec<Camera>> {
    if n == 0 {
        return Err(Error::Contract("sample_views with n = 0".into()));
    }
    let (r0, r1) = radius_range;
    if !(r0 > 0.0 && r1 >= r0) {
        return Err(Error::Contract(format!(
            "radius range [{r0}, {r1}] must be positive and ordered"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let focal = focal_factor * resolution as f64;
    let mut cameras = Vec::with_capacity(n);
    for _ in 0..n {
        // uniform area on the hemisphere: z uniform in [0,1]
        let z: f64 = rng.gen();
        let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let rxy = (1.0 - z * z).sqrt();
        let dir = vec3(rxy * theta.cos(), rxy * theta.sin(), z);
        let radius = r0 + (r1 - r0) * rng.gen::<f64>();
        let eye = dir.scale(radius);
        cameras.push(Camera::look_at(
            eye,
            crate::geometry::Vec3::ZERO,
            vec3(0.0, 0.0, 1.0),
            focal,
            resolution,
            resolution,
        )?);
    }
    Ok(cameras)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_stay_in_the_upper_hemisphere() {
        let cams = sample_views(64, DEFAULT_RADIUS_RANGE, 11, 32, DEFAULT_FOCAL_FACTOR).unwrap();
        assert_eq!(cams.len(), 64);
        for cam in &cams {
            assert!(cam.t.z >= 0.0);
            let r = cam.t.norm();
            assert!((1.2..=2.0).contains(&r));
        }
    }

    #[test]
    fn same_seed_same_cameras() {
        let a = sample_views(10, (1.5, 1.5), 5, 16, 0.5).unwrap();
        let b = sample_views(10, (1.5, 1.5), 5, 16, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn optical_axis_passes_through_origin() {
        for cam in sample_views(32, DEFAULT_RADIUS_RANGE, 3, 8, 0.5).unwrap() {
            let axis = cam.r.col(2);
            let d = (crate::geometry::Vec3::ZERO - cam.t).dot(axis);
            let closest = cam.t + axis.scale(d);
            assert!(closest.norm() < 1e-6);
        }
    }
}
