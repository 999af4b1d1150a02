//! Texture fields: continuous texture as a function from 3D points to color.
//!
//! The crate provides the full desk-scale pipeline around that idea:
//!
//! - [`autodiff`] — dense tensors, reverse-mode differentiation, Adam;
//! - [`geometry`] — colored triangle meshes, cameras, surface sampling,
//!   pixel unprojection;
//! - [`raster`] — a software z-buffer rasterizer and synthetic dataset
//!   generation;
//! - [`nets`] — the texture-field network, point-cloud shape encoder,
//!   image encoder and VAE encoder;
//! - [`train`] — conditional and VAE training loops;
//! - [`eval`] — SSIM/PSNR/ℓ1 metrics, field rendering, mesh colorization,
//!   and a colored-voxel baseline;
//! - [`cli`] — the `texf` command-line front end.
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability.

pub mod autodiff;
pub mod cli;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod kv;
pub mod nets;
pub mod raster;
pub mod train;

pub use error::{Error, Result};
