//! Stochastic texture filtering.
//!
//! Every multi-tap texture filter in this crate (bilinear, B-spline, Keys
//! cubic, Gaussian, EWA, trilinear MIP mapping) comes in two flavours: a
//! deterministic reference in [`filters`] that reads the whole footprint, and
//! a Monte Carlo estimator in [`stochastic`] that reads a single texel (two
//! for filters with negative lobes) whose expectation equals the reference.
//!
//! [`shading`] compares filtering a texture before a nonlinear shading map
//! with filtering the shaded result, and [`dct`] provides a block-compressed
//! backend where each texel read costs one decode.

pub mod dct;
mod error;
pub mod filters;
pub mod fixtures;
pub mod kernels;
pub mod shading;
pub mod stats;
pub mod stochastic;
pub mod texture;

pub use dct::DctBlockTexture;
pub use error::{Error, Result};
pub use filters::{Filter, FilterQuery2D, FilterQuery3D, Tap, VolumeFilter};
pub use kernels::{KernelSpec, Window};
pub use shading::ShadingMap;
pub use stochastic::{RngStream, StochFilter, TapEstimate, TapSelection};
pub use texture::{AddressMode, ColorSpace, FetchCounter, MipPyramid, Texel, TexelSource, TextureGrid};
