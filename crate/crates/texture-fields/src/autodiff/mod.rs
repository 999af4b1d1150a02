//! Tensor arithmetic with reverse-mode differentiation and Adam.
//!
//! Everything trainable in this crate is built from these pieces: a dense
//! [`Tensor`], a per-iteration [`Tape`] recording forward operations, a
//! named [`ParamStore`], and [`AdamState`]. Training defaults to f32;
//! the same code instantiates in f64 for finite-difference checks.

mod adam;
pub mod checkpoint;
mod kernels;
mod params;
mod scalar;
mod tape;
mod tensor;

pub use adam::AdamState;
pub use params::{Binding, ParamId, ParamStore};
pub use scalar::Scalar;
pub use tape::{NodeId, Tape};
pub use tensor::Tensor;
