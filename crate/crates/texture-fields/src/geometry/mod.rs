//! Meshes, cameras, surface sampling, and pixel unprojection.
//!
//! World convention: right-handed, +z up. Cameras look at the origin with
//! image y pointing down. Meshes are normalized to a unit bounding cube
//! before sampling, rendering, or field queries.

pub mod camera;
pub mod io;
pub mod mesh;
pub mod primitives;
pub mod sampling;
pub mod vec;

pub use camera::Camera;
pub use io::{load_mesh, save_ply};
pub use mesh::{normalize_mesh, transform_mesh, Mesh};
pub use sampling::{sample_surface, PointCloud};
pub use vec::{vec3, Mat3, Vec3};
