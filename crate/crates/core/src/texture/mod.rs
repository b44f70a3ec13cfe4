//! Texel storage: 2D images and 3D voxel grids with addressed fetches.

mod io;
mod mip;
mod srgb;

pub use io::{load_image, load_volume, store_image, store_volume, VOLUME_MAGIC, VOLUME_VERSION};
pub use mip::{build_mip_pyramid, MipPyramid};
pub use srgb::{linear_to_srgb, linear_to_srgb_strict, srgb_to_linear, srgb_to_linear_strict};

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Sub};

use crate::{Error, Result};

pub const MAX_CHANNELS: usize = 4;

/// How out-of-range texel coordinates are remapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AddressMode {
    #[default]
    Clamp,
    Wrap,
}

impl AddressMode {
    #[inline]
    pub fn remap(self, coord: i64, size: usize) -> usize {
        let n = size as i64;
        match self {
            AddressMode::Clamp => coord.clamp(0, n - 1) as usize,
            AddressMode::Wrap => coord.rem_euclid(n) as usize,
        }
    }
}

/// Whether stored values are linear light or still sRGB encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ColorSpace {
    #[default]
    Linear,
    SrgbEncoded,
}

/// Texel reads performed by a filter invocation.
///
/// Counters are owned per call (or per worker) and merged by summation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FetchCounter {
    /// Texel reads.
    pub count: u64,
    /// Compressed-block decodes.
    pub decode_count: u64,
}

impl FetchCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn merge(&mut self, other: FetchCounter) {
        self.count += other.count;
        self.decode_count += other.decode_count;
    }
}

impl AddAssign for FetchCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.merge(rhs);
    }
}

/// A channel vector of up to four values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Texel {
    values: [f64; MAX_CHANNELS],
    channels: u8,
}

impl Texel {
    pub fn zero(channels: usize) -> Self {
        debug_assert!((1..=MAX_CHANNELS).contains(&channels));
        Texel {
            values: [0.0; MAX_CHANNELS],
            channels: channels as u8,
        }
    }

    pub fn splat(value: f64, channels: usize) -> Self {
        let mut t = Texel::zero(channels);
        t.values[..channels].fill(value);
        t
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut t = Texel::zero(values.len());
        t.values[..values.len()].copy_from_slice(values);
        t
    }

    pub fn channels(&self) -> usize {
        self.channels as usize
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.channels as usize]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values[..self.channels as usize]
    }

    /// First channel; the scalar experiments use single-channel data.
    pub fn x(&self) -> f64 {
        self.values[0]
    }

    pub fn mean(&self) -> f64 {
        self.as_slice().iter().sum::<f64>() / self.channels as f64
    }

    #[inline]
    pub fn add_scaled(&mut self, other: &Texel, weight: f64) {
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += weight * b;
        }
    }

    pub fn map(mut self, f: impl Fn(f64) -> f64) -> Self {
        self.as_mut_slice().iter_mut().for_each(|v| *v = f(*v));
        self
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

impl Add for Texel {
    type Output = Texel;
    fn add(mut self, rhs: Texel) -> Texel {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for Texel {
    type Output = Texel;
    fn sub(mut self, rhs: Texel) -> Texel {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Mul<f64> for Texel {
    type Output = Texel;
    fn mul(self, rhs: f64) -> Texel {
        self.map(|v| v * rhs)
    }
}

/// Anything that can return texels by integer coordinate.
///
/// Coordinates are `[x, y, z]`; 2D sources ignore `z`. `level` selects a MIP
/// level for pyramids and must be 0 for single-level sources.
pub trait TexelSource {
    /// Level-0 dimensions, `[w, h, d]` with `d == 1` for images.
    fn dims(&self) -> [usize; 3];

    fn channels(&self) -> usize;

    fn levels(&self) -> usize {
        1
    }

    fn level_dims(&self, level: usize) -> [usize; 3] {
        debug_assert_eq!(level, 0);
        self.dims()
    }

    fn fetch(&self, level: usize, coord: [i64; 3], counter: &mut FetchCounter) -> Texel;
}

/// A channel-interleaved 2D or 3D grid of finite values.
///
/// Storage is row-major with x fastest: element `(x, y, z, c)` lives at
/// `((z * h + y) * w + x) * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureGrid {
    dims: [usize; 3],
    ndim: u8,
    channels: usize,
    data: Vec<f32>,
    address_mode: AddressMode,
    color_space: ColorSpace,
}

impl TextureGrid {
    pub fn new_2d(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        Self::build([width, height, 1], 2, channels, data)
    }

    pub fn new_3d(dims: [usize; 3], channels: usize, data: Vec<f32>) -> Result<Self> {
        Self::build(dims, 3, channels, data)
    }

    fn build(dims: [usize; 3], ndim: u8, channels: usize, data: Vec<f32>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::param(format!(
                "texture dimensions must be positive, got {dims:?}"
            )));
        }
        if !(1..=MAX_CHANNELS).contains(&channels) {
            return Err(Error::param(format!("channel count must be 1..=4, got {channels}")));
        }
        let expected = dims
            .iter()
            .try_fold(channels, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::param("texture size overflows"))?;
        if data.len() != expected {
            return Err(Error::param(format!(
                "data length {} does not match {dims:?} x {channels} channels",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite texel value at element {i}")));
        }
        Ok(TextureGrid {
            dims,
            ndim,
            channels,
            data,
            address_mode: AddressMode::Clamp,
            color_space: ColorSpace::Linear,
        })
    }

    /// Builds a 2D grid from a per-texel closure `f(x, y, channel)`.
    pub fn from_fn_2d(
        width: usize,
        height: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new_2d(width, height, channels, data)
    }

    pub fn from_fn_3d(
        dims: [usize; 3],
        channels: usize,
        f: impl Fn(usize, usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.iter().product::<usize>() * channels);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    for c in 0..channels {
                        data.push(f(x, y, z, c));
                    }
                }
            }
        }
        Self::new_3d(dims, channels, data)
    }

    pub fn with_address_mode(mut self, mode: AddressMode) -> Self {
        self.address_mode = mode;
        self
    }

    pub fn with_color_space(mut self, space: ColorSpace) -> Self {
        self.color_space = space;
        self
    }

    pub fn ndim(&self) -> usize {
        self.ndim as usize
    }

    pub fn width(&self) -> usize {
        self.dims[0]
    }

    pub fn height(&self) -> usize {
        self.dims[1]
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn depth(&self) -> usize {
        self.dims[2]
    }

    pub fn texel_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn address_mode(&self) -> AddressMode {
        self.address_mode
    }

    pub fn color_space(&self) -> ColorSpace {
        self.color_space
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    fn offset(&self, x: usize, y: usize, z: usize) -> usize {
        ((z * self.dims[1] + y) * self.dims[0] + x) * self.channels
    }

    /// Texel at in-range coordinates, without accounting.
    pub fn texel(&self, x: usize, y: usize, z: usize) -> Texel {
        let o = self.offset(x, y, z);
        let mut t = Texel::zero(self.channels);
        for (dst, src) in t.as_mut_slice().iter_mut().zip(&self.data[o..o + self.channels]) {
            *dst = *src as f64;
        }
        t
    }

    /// Reads one texel after address-mode remapping and counts the read.
    #[inline]
    pub fn fetch_texel(&self, coord: [i64; 3], counter: &mut FetchCounter) -> Texel {
        counter.count += 1;
        let x = self.address_mode.remap(coord[0], self.dims[0]);
        let y = self.address_mode.remap(coord[1], self.dims[1]);
        let z = self.address_mode.remap(coord[2], self.dims[2]);
        self.texel(x, y, z)
    }

    /// Arithmetic mean over every texel and channel.
    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Converts sRGB-encoded colour channels to linear light. Alpha (the
    /// second channel of two, the fourth of four) is left as is.
    pub fn to_linear(mut self) -> Self {
        if self.color_space == ColorSpace::SrgbEncoded {
            let alpha = has_alpha(self.channels);
            let ch = self.channels;
            for (i, v) in self.data.iter_mut().enumerate() {
                if !(alpha && i % ch == ch - 1) {
                    *v = srgb_to_linear(*v as f64) as f32;
                }
            }
            self.color_space = ColorSpace::Linear;
        }
        self
    }

    /// Inverse of [`TextureGrid::to_linear`].
    pub fn to_srgb(mut self) -> Self {
        if self.color_space == ColorSpace::Linear {
            let alpha = has_alpha(self.channels);
            let ch = self.channels;
            for (i, v) in self.data.iter_mut().enumerate() {
                if !(alpha && i % ch == ch - 1) {
                    *v = linear_to_srgb(*v as f64) as f32;
                }
            }
            self.color_space = ColorSpace::SrgbEncoded;
        }
        self
    }
}

fn has_alpha(channels: usize) -> bool {
    channels == 2 || channels == 4
}

impl TexelSource for TextureGrid {
    fn dims(&self) -> [usize; 3] {
        self.dims
    }

    fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    fn fetch(&self, level: usize, coord: [i64; 3], counter: &mut FetchCounter) -> Texel {
        debug_assert_eq!(level, 0);
        self.fetch_texel(coord, counter)
    }
}
