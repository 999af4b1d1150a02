//! Pinhole camera: intrinsics K, extrinsics (R, t), and the pixel
//! unprojection p = d * R * K^-1 * u_hom + t.
//!
//! R maps camera coordinates to world coordinates and t is the camera
//! center, so the forward projection is u = perspective(K * R^T * (p - t))
//! with depth taken as camera-frame z. Pixel sample points sit at pixel
//! centers (u + 0.5 convention lives in the rasterizer; this module treats
//! pixel coordinates as continuous).

use super::vec::{vec3, Mat3, Vec3};
use crate::error::{Error, Result};
use crate::kv::KvDoc;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub k: Mat3,
    pub r: Mat3,
    pub t: Vec3,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn new(k: Mat3, r: Mat3, t: Vec3, width: usize, height: usize) -> Result<Self> {
        let cam = Self {
            k,
            r,
            t,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        // R orthonormal with determinant +1
        let rt_r = self.r.transpose().mul_mat(&self.r);
        for (i, (a, b)) in rt_r.0.iter().zip(Mat3::IDENTITY.0.iter()).enumerate() {
            if (a - b).abs() > 1e-6 {
                return Err(Error::Domain(format!(
                    "camera rotation not orthonormal (R^T R entry {i} = {a})"
                )));
            }
        }
        if (self.r.det() - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "camera rotation determinant {} != +1",
                self.r.det()
            )));
        }
        // K upper-triangular with positive focal entries
        let k = &self.k.0;
        if k[3] != 0.0 || k[6] != 0.0 || k[7] != 0.0 {
            return Err(Error::Domain("camera intrinsics not upper-triangular".into()));
        }
        if k[0] <= 0.0 || k[4] <= 0.0 {
            return Err(Error::Domain("camera focal lengths must be positive".into()));
        }
        Ok(())
    }

    /// Simple intrinsics: square pixels, principal point at the image center.
    pub fn intrinsics(focal: f64, width: usize, height: usize) -> Mat3 {
        Mat3([
            focal,
            0.0,
            width as f64 / 2.0,
            0.0,
            focal,
            height as f64 / 2.0,
            0.0,
            0.0,
            1.0,
        ])
    }

    /// Camera at `eye` looking at `target`, with a world-up hint. The
    /// optical axis passes through `target` exactly.
    pub fn look_at(
        eye: Vec3,
        target: Vec3,
        up_hint: Vec3,
        focal: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let forward = (target - eye).normalized();
        let mut right = forward.cross(up_hint);
        if right.norm() < 1e-9 {
            // forward parallel to the hint (e.g. straight above the target)
            right = forward.cross(vec3(1.0, 0.0, 0.0));
            if right.norm() < 1e-9 {
                right = forward.cross(vec3(0.0, 1.0, 0.0));
            }
        }
        let right = right.normalized();
        let down = forward.cross(right); // image y runs downward
        let r = Mat3::from_cols(right, down, forward);
        Camera::new(Self::intrinsics(focal, width, height), r, eye, width, height)
    }

    pub fn inv_k(&self) -> Mat3 {
        let k = &self.k.0;
        let (fx, s, cx, fy, cy) = (k[0], k[1], k[2], k[4], k[5]);
        // closed-form inverse of an upper-triangular intrinsics matrix
        Mat3([
            1.0 / fx,
            -s / (fx * fy),
            (s * cy - cx * fy) / (fx * fy),
            0.0,
            1.0 / fy,
            -cy / fy,
            0.0,
            0.0,
            1.0,
        ])
    }

    /// camera-frame coordinates of a world point
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        self.r.transpose().mul_vec(p - self.t)
    }

    /// Pixel and camera-frame depth of a world point in front of the camera.
    pub fn project(&self, p: Vec3) -> Result<([f64; 2], f64)> {
        let q = self.to_camera(p);
        if q.z <= 0.0 {
            return Err(Error::Domain(format!(
                "point behind camera (depth {})",
                q.z
            )));
        }
        let h = self.k.mul_vec(q);
        Ok(([h.x / h.z, h.y / h.z], q.z))
    }

    /// World point of a pixel at a given camera-frame depth:
    /// p = d * R * K^-1 * (u, v, 1) + t.
    pub fn unproject(&self, u: [f64; 2], depth: f64) -> Result<Vec3> {
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::Domain(format!("non-positive depth {depth}")));
        }
        let ray = self.inv_k().mul_vec(vec3(u[0], u[1], 1.0));
        Ok(self.r.mul_vec(ray.scale(depth)) + self.t)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut doc = KvDoc::new();
        doc.push("format", "texf-camera-v1");
        doc.push_floats("K", &self.k.0);
        doc.push_floats("R", &self.r.0);
        doc.push_floats("t", &self.t.to_array());
        doc.push("width", self.width);
        doc.push("height", self.height);
        doc.write(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let doc = KvDoc::read(path)?;
        let k: [f64; 9] = doc.parse_floats("K", 9)?.try_into().unwrap();
        let r: [f64; 9] = doc.parse_floats("R", 9)?.try_into().unwrap();
        let t = doc.parse_floats("t", 3)?;
        Camera::new(
            Mat3(k),
            Mat3(r),
            vec3(t[0], t[1], t[2]),
            doc.parse_value("width")?,
            doc.parse_value("height")?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_camera() -> Camera {
        Camera::new(Mat3::IDENTITY, Mat3::IDENTITY, Vec3::ZERO, 4, 4).unwrap()
    }

    #[test]
    fn identity_camera_unprojects_along_z() {
        let cam = identity_camera();
        let p = cam.unproject([0.0, 0.0], 2.0).unwrap();
        assert!((p - vec3(0.0, 0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_camera_projects_back() {
        let cam = identity_camera();
        let ([u, v], d) = cam.project(vec3(0.0, 0.0, 2.0)).unwrap();
        assert_eq!((u, v, d), (0.0, 0.0, 2.0));
    }

    #[test]
    fn hand_evaluated_unprojection() {
        // focal 100, principal point (64,64), u at the principal point,
        // d = 1, R = I, t = (1,0,0): ray (0,0,1), point (1,0,1)
        let k = Mat3([100.0, 0.0, 64.0, 0.0, 100.0, 64.0, 0.0, 0.0, 1.0]);
        let cam = Camera::new(k, Mat3::IDENTITY, vec3(1.0, 0.0, 0.0), 128, 128).unwrap();
        let p = cam.unproject([64.0, 64.0], 1.0).unwrap();
        assert!((p - vec3(1.0, 0.0, 1.0)).norm() < 1e-12);
        // and the inverse recovers the pixel
        let ([u, v], d) = cam.project(p).unwrap();
        assert!((u - 64.0).abs() < 1e-9 && (v - 64.0).abs() < 1e-9);
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn camera_center_has_zero_depth() {
        let cam = identity_camera();
        assert!(matches!(cam.project(Vec3::ZERO), Err(Error::Domain(_))));
    }

    #[test]
    fn non_positive_depth_is_domain_error() {
        let cam = identity_camera();
        assert!(cam.unproject([0.0, 0.0], 0.0).is_err());
        assert!(cam.unproject([0.0, 0.0], -1.0).is_err());
        assert!(cam.unproject([0.0, 0.0], f64::NAN).is_err());
    }

    #[test]
    fn look_at_axis_passes_through_target() {
        let cam = Camera::look_at(vec3(1.5, -2.0, 1.0), Vec3::ZERO, vec3(0.0, 0.0, 1.0), 100.0, 64, 64)
            .unwrap();
        // the camera-frame z axis in world coordinates is R's third column;
        // the target must sit on the ray eye + d * axis
        let axis = cam.r.col(2);
        let d = (Vec3::ZERO - cam.t).dot(axis);
        let closest = cam.t + axis.scale(d);
        assert!(closest.norm() < 1e-9);
        cam.validate().unwrap();
    }

    #[test]
    fn camera_file_round_trip() {
        let cam = Camera::look_at(vec3(0.3, 0.4, 1.2), Vec3::ZERO, vec3(0.0, 0.0, 1.0), 96.0, 128, 96)
            .unwrap();
        let dir = std::env::temp_dir().join("texf_cam_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cam.txt");
        cam.write(&path).unwrap();
        let back = Camera::read(&path).unwrap();
        assert_eq!(cam, back);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_bad_rotation() {
        let r = Mat3([1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(Camera::new(Mat3::IDENTITY, r, Vec3::ZERO, 4, 4).is_err());
    }
}
