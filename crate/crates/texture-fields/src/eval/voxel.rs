//! Colored-voxel baseline.
//!
//! A normalized mesh is voxelized by dense surface sampling: a voxel is
//! occupied when at least one sample lands in it, and its color is the
//! mean of contained sample colors (order-independent). Rendering reuses
//! the triangle rasterizer on a cube-per-voxel mesh.

use crate::error::{Error, Result};
use crate::geometry::{sample_surface, vec3, Camera, Mesh, Vec3};
use crate::raster::{rasterize, ViewSample};

/// target samples per occupied surface voxel during voxelization
const SAMPLES_PER_VOXEL: f64 = 20.0;
const VOXELIZE_SEED: u64 = 0x7665_6c31;

#[derive(Debug, Clone)]
pub struct ColorVoxelGrid {
    pub resolution: usize,
    pub occupancy: Vec<bool>,
    /// mean sample color per occupied voxel; unoccupied entries are black
    pub colors: Vec<Vec3>,
}

impl ColorVoxelGrid {
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.resolution + iy) * self.resolution + ix
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    /// Dense color storage of an R^3 grid in 32-bit floats.
    pub fn memory_bytes(resolution: usize) -> usize {
        resolution * resolution * resolution * 3 * 4
    }

    /// Voxelize an explicit sample set over the unit cube [-0.5, 0.5]^3.
    pub fn from_samples(points: &[Vec3], colors: &[Vec3], resolution: usize) -> Result<Self> {
        if resolution < 1 {
            return Err(Error::Contract("voxel resolution must be >= 1".into()));
        }
        if points.len() != colors.len() {
            return Err(Error::Contract("sample points and colors disagree".into()));
        }
        let r = resolution;
        let n = r * r * r;
        let mut sums = vec![Vec3::ZERO; n];
        let mut counts = vec![0u32; n];
        let clampi = |v: f64| -> usize {
            let i = ((v + 0.5) * r as f64).floor();
            i.clamp(0.0, (r - 1) as f64) as usize
        };
        for (p, c) in points.iter().zip(colors) {
            let (ix, iy, iz) = (clampi(p.x), clampi(p.y), clampi(p.z));
            let idx = (iz * r + iy) * r + ix;
            sums[idx] = sums[idx] + *c;
            counts[idx] += 1;
        }
        let mut occupancy = vec![false; n];
        let mut out_colors = vec![Vec3::ZERO; n];
        for i in 0..n {
            if counts[i] > 0 {
                occupancy[i] = true;
                out_colors[i] = sums[i].scale(1.0 / counts[i] as f64);
            }
        }
        Ok(Self {
            resolution,
            occupancy,
            colors: out_colors,
        })
    }
}

/// Voxelize a normalized mesh at the given resolution, drawing enough
/// surface samples for ~20 per occupied voxel.
pub fn build_color_voxel_grid(mesh: &Mesh, resolution: usize) -> Result<ColorVoxelGrid> {
    if resolution < 1 {
        return Err(Error::Contract("voxel resolution must be >= 1".into()));
    }
    let area = mesh.surface_area();
    let voxel_side = 1.0 / resolution as f64;
    let expected_voxels = (area / (voxel_side * voxel_side)).max(1.0);
    let n_samples = (SAMPLES_PER_VOXEL * expected_voxels).ceil() as usize;
    let cloud = sample_surface(mesh, n_samples.max(1000), VOXELIZE_SEED, "voxelize")?;
    ColorVoxelGrid::from_samples(&cloud.points, &cloud.colors, resolution)
}

/// Expand occupied voxels into a cube-soup mesh with flat colors.
pub fn voxel_grid_mesh(grid: &ColorVoxelGrid) -> Mesh {
    let r = grid.resolution;
    let side = 1.0 / r as f64;
    let mut vertices = Vec::new();
    let mut colors = Vec::new();
    let mut faces = Vec::new();
    // cube corner offsets and the two triangles per face
    const CORNERS: [[f64; 3]; 8] = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0],
    ];
    const QUADS: [[usize; 4]; 6] = [
        [0, 1, 2, 3],
        [4, 7, 6, 5],
        [0, 4, 5, 1],
        [1, 5, 6, 2],
        [2, 6, 7, 3],
        [3, 7, 4, 0],
    ];
    for iz in 0..r {
        for iy in 0..r {
            for ix in 0..r {
                let idx = grid.index(ix, iy, iz);
                if !grid.occupancy[idx] {
                    continue;
                }
                let base = vertices.len();
                let origin = vec3(
                    ix as f64 * side - 0.5,
                    iy as f64 * side - 0.5,
                    iz as f64 * side - 0.5,
                );
                for c in &CORNERS {
                    vertices.push(origin + vec3(c[0] * side, c[1] * side, c[2] * side));
                    colors.push(grid.colors[idx]);
                }
                for q in &QUADS {
                    faces.push([base + q[0], base + q[1], base + q[2]]);
                    faces.push([base + q[0], base + q[2], base + q[3]]);
                }
            }
        }
    }
    Mesh {
        vertices,
        vertex_colors: colors,
        faces,
    }
}

/// Rasterize occupied voxels as flat-colored cubes, z-buffered.
pub fn render_voxel_grid(
    grid: &ColorVoxelGrid,
    camera: &Camera,
    background: Vec3,
) -> Result<ViewSample> {
    rasterize(&voxel_grid_mesh(grid), camera, background)
}
