//! Deterministic reference filters.
//!
//! Every filter here is a weighted sum over a set of [`Tap`]s. Texel centres
//! sit at integer raster coordinates, so a lookup at `s` touches texels
//! `floor(s) + i` for the offsets of the kernel window. Weights returned by
//! the `*_taps` functions are normalized.

mod ewa;
mod lod;

pub(crate) use ewa::EwaLevels;
pub use ewa::{ewa_filter_lut, ewa_taps, filter_ewa, filter_ewa_mip, EwaEllipse, EWA_LUT_SIZE};
pub use lod::{compute_aniso_lod, level_coord, AnisoLod, DEFAULT_MAX_ANISOTROPY};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use statrs::function::erf::erfc;

use crate::kernels::{bspline_window, KernelSpec, Window};
use crate::texture::{FetchCounter, Texel, TexelSource};
use crate::{Error, Result};

/// One weighted texel read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub coord: [i64; 3],
    pub level: usize,
    pub weight: f64,
}

pub type Taps = SmallVec<[Tap; 16]>;

/// A 2D lookup in raster coordinates with screen-space derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterQuery2D {
    pub st: [f64; 2],
    /// Texture-coordinate change per screen x step, raster units.
    pub dst0: [f64; 2],
    /// Texture-coordinate change per screen y step, raster units.
    pub dst1: [f64; 2],
    pub mip_bias: f64,
}

impl FilterQuery2D {
    pub fn at(s: f64, t: f64) -> Self {
        FilterQuery2D {
            st: [s, t],
            ..Default::default()
        }
    }

    pub fn with_derivatives(mut self, dst0: [f64; 2], dst1: [f64; 2]) -> Self {
        self.dst0 = dst0;
        self.dst1 = dst1;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.st
            .iter()
            .chain(&self.dst0)
            .chain(&self.dst1)
            .chain(std::iter::once(&self.mip_bias))
            .all(|v| v.is_finite())
    }

    pub fn has_zero_derivatives(&self) -> bool {
        self.dst0 == [0.0, 0.0] && self.dst1 == [0.0, 0.0]
    }
}

/// A 3D lookup in raster coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterQuery3D {
    pub p: [f64; 3],
}

#[inline]
pub(crate) fn split(s: f64) -> (i64, f64) {
    let f = s.floor();
    (f as i64, s - f)
}

/// Weighted sum of texel reads.
pub fn apply_taps<S: TexelSource + ?Sized>(src: &S, taps: &[Tap], counter: &mut FetchCounter) -> Texel {
    let mut acc = Texel::zero(src.channels());
    for tap in taps {
        let t = src.fetch(tap.level, tap.coord, counter);
        acc.add_scaled(&t, tap.weight);
    }
    acc
}

/// The four bilinear taps around `st` at the given MIP level.
pub fn bilinear_taps(st: [f64; 2], level: usize) -> [Tap; 4] {
    let (s, ds) = split(st[0]);
    let (t, dt) = split(st[1]);
    let tap = |x, y, w| Tap {
        coord: [x, y, 0],
        level,
        weight: w,
    };
    [
        tap(s, t, (1.0 - ds) * (1.0 - dt)),
        tap(s + 1, t, ds * (1.0 - dt)),
        tap(s, t + 1, (1.0 - ds) * dt),
        tap(s + 1, t + 1, ds * dt),
    ]
}

pub fn filter_bilinear<S: TexelSource + ?Sized>(src: &S, st: [f64; 2], counter: &mut FetchCounter) -> Texel {
    apply_taps(src, &bilinear_taps(st, 0), counter)
}

/// The eight trilinear taps of a 3D lookup.
pub fn trilinear_taps(p: [f64; 3]) -> [Tap; 8] {
    let (i, fx) = split(p[0]);
    let (j, fy) = split(p[1]);
    let (k, fz) = split(p[2]);
    std::array::from_fn(|n| {
        let (dx, dy, dz) = ((n & 1) as i64, ((n >> 1) & 1) as i64, ((n >> 2) & 1) as i64);
        let wx = if dx == 1 { fx } else { 1.0 - fx };
        let wy = if dy == 1 { fy } else { 1.0 - fy };
        let wz = if dz == 1 { fz } else { 1.0 - fz };
        Tap {
            coord: [i + dx, j + dy, k + dz],
            level: 0,
            weight: wx * wy * wz,
        }
    })
}

pub fn filter_trilinear<S: TexelSource + ?Sized>(src: &S, p: [f64; 3], counter: &mut FetchCounter) -> Texel {
    apply_taps(src, &trilinear_taps(p), counter)
}

/// Normalized per-axis window for a separable kernel.
pub(crate) fn axis_window(spec: &KernelSpec, s: f64) -> Result<(i64, Window)> {
    let (base, frac) = split(s);
    let w = spec.window(frac, spec.min_taps())?;
    Ok((
        base + w.first_offset,
        if spec.is_partition_of_unity() {
            w
        } else {
            w.normalized()
        },
    ))
}

/// Full tensor-product window of a separable kernel around `st`.
pub fn separable_taps_2d(spec: &KernelSpec, st: [f64; 2], level: usize) -> Result<Taps> {
    let (x0, wx) = axis_window(spec, st[0])?;
    let (y0, wy) = axis_window(spec, st[1])?;
    Ok(outer_2d(x0, &wx.weights, y0, &wy.weights, level))
}

fn outer_2d(x0: i64, wx: &[f64], y0: i64, wy: &[f64], level: usize) -> Taps {
    let mut taps = Taps::with_capacity(wx.len() * wy.len());
    for (j, &w_y) in wy.iter().enumerate() {
        for (i, &w_x) in wx.iter().enumerate() {
            taps.push(Tap {
                coord: [x0 + i as i64, y0 + j as i64, 0],
                level,
                weight: w_x * w_y,
            });
        }
    }
    taps
}

/// Full tensor-product window of a separable kernel around a 3D point.
pub fn separable_taps_3d(spec: &KernelSpec, p: [f64; 3]) -> Result<Vec<Tap>> {
    let (x0, wx) = axis_window(spec, p[0])?;
    let (y0, wy) = axis_window(spec, p[1])?;
    let (z0, wz) = axis_window(spec, p[2])?;
    let mut taps = Vec::with_capacity(wx.len() * wy.len() * wz.len());
    for (k, &w_z) in wz.weights.iter().enumerate() {
        for (j, &w_y) in wy.weights.iter().enumerate() {
            for (i, &w_x) in wx.weights.iter().enumerate() {
                taps.push(Tap {
                    coord: [x0 + i as i64, y0 + j as i64, z0 + k as i64],
                    level: 0,
                    weight: w_x * w_y * w_z,
                });
            }
        }
    }
    Ok(taps)
}

pub fn filter_separable_2d<S: TexelSource + ?Sized>(
    src: &S,
    spec: &KernelSpec,
    st: [f64; 2],
    counter: &mut FetchCounter,
) -> Result<Texel> {
    Ok(apply_taps(src, &separable_taps_2d(spec, st, 0)?, counter))
}

/// 16-tap cubic B-spline filter.
pub fn filter_bicubic_bspline<S: TexelSource + ?Sized>(src: &S, st: [f64; 2], counter: &mut FetchCounter) -> Texel {
    filter_separable_2d(src, &KernelSpec::CubicBSpline, st, counter).expect("B-spline window is always valid")
}

/// 64-tap cubic B-spline filter over a volume.
pub fn filter_tricubic_bspline<S: TexelSource + ?Sized>(src: &S, p: [f64; 3], counter: &mut FetchCounter) -> Texel {
    let spec = KernelSpec::CubicBSpline;
    let window = |s| axis_window(&spec, s).expect("B-spline window is always valid");
    let ((x0, wx), (y0, wy), (z0, wz)) = (window(p[0]), window(p[1]), window(p[2]));
    let mut acc = Texel::zero(src.channels());
    for (k, &w_z) in wz.weights.iter().enumerate() {
        for (j, &w_y) in wy.weights.iter().enumerate() {
            let w_yz = w_y * w_z;
            for (i, &w_x) in wx.weights.iter().enumerate() {
                let t = src.fetch(0, [x0 + i as i64, y0 + j as i64, z0 + k as i64], counter);
                acc.add_scaled(&t, w_x * w_yz);
            }
        }
    }
    acc
}

/// 16-tap interpolating Keys cubic.
pub fn filter_bicubic_keys<S: TexelSource + ?Sized>(
    src: &S,
    st: [f64; 2],
    a: f64,
    counter: &mut FetchCounter,
) -> Result<Texel> {
    filter_separable_2d(src, &KernelSpec::KeysCubic { a }, st, counter)
}

/// Truncated Gaussian normalized over its `2 * ceil(radius)` tap window.
pub fn filter_gaussian_window<S: TexelSource + ?Sized>(
    src: &S,
    st: [f64; 2],
    sigma: f64,
    radius: f64,
    counter: &mut FetchCounter,
) -> Result<Texel> {
    filter_separable_2d(src, &KernelSpec::Gaussian { sigma, radius }, st, counter)
}

/// Normalized mixture `sum(w_i v_i) / sum(w_i)`.
pub fn blend_weighted(values: &[Texel], weights: &[f64]) -> Result<Texel> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::param(format!(
            "blend needs matching non-empty lists, got {} values and {} weights",
            values.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::param("blend weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::param("blend weights sum to zero"));
    }
    let mut acc = Texel::zero(values[0].channels());
    for (v, w) in values.iter().zip(weights) {
        acc.add_scaled(v, w / total);
    }
    Ok(acc)
}

/// Probability that a Gaussian offset lands in each unit cell around `s`.
fn gaussian_cell_window(s: f64, sigma: f64) -> (i64, SmallVec<[f64; 8]>) {
    let (base, _) = split(s);
    let reach = (8.0 * sigma).ceil() as i64 + 1;
    let cdf = |x: f64| 0.5 * erfc(-x / (sigma * std::f64::consts::SQRT_2));
    let first = base - reach;
    let weights = (first..=base + reach + 1)
        .map(|k| cdf(k as f64 + 0.5 - s) - cdf(k as f64 - 0.5 - s))
        .collect();
    (first, weights)
}

/// Taps of the filter realized by Gaussian filter importance sampling with
/// nearest lookup: the Gaussian convolved with a unit box.
pub fn fis_gaussian_taps(st: [f64; 2], sigma: f64, level: usize) -> Result<Taps> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("Gaussian sigma must be positive, got {sigma}")));
    }
    let (x0, wx) = gaussian_cell_window(st[0], sigma);
    let (y0, wy) = gaussian_cell_window(st[1], sigma);
    let mut taps = outer_2d(x0, &wx, y0, &wy, level);
    let total: f64 = taps.iter().map(|t| t.weight).sum();
    taps.iter_mut().for_each(|t| t.weight /= total);
    Ok(taps)
}

/// Taps of the filter realized by summing `degree` uniforms and taking the
/// nearest texel: the cardinal B-spline of that degree.
pub fn fis_bspline_taps(st: [f64; 2], degree: u32, level: usize) -> Result<Taps> {
    if degree == 0 {
        return Err(Error::param("B-spline sampling needs at least one uniform per axis"));
    }
    let (bx, fx) = split(st[0]);
    let (by, fy) = split(st[1]);
    let wx = bspline_window(degree, fx);
    let wy = bspline_window(degree, fy);
    Ok(outer_2d(
        bx + wx.first_offset,
        &wx.weights,
        by + wy.first_offset,
        &wy.weights,
        level,
    ))
}

/// Deterministic 2D filters, each the reference for a stochastic estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Filter {
    Bilinear,
    BicubicBSpline,
    BicubicKeys {
        a: f64,
    },
    Lanczos {
        lobes: u32,
    },
    /// Truncated discrete Gaussian.
    Gaussian {
        sigma: f64,
        radius: f64,
    },
    /// Elliptically weighted average; uses the MIP chain when available.
    Ewa,
    TrilinearMip,
    /// Gaussian convolved with a unit box (what FIS with nearest lookup
    /// realizes).
    FisGaussian {
        sigma: f64,
    },
    /// Cardinal B-spline of the given degree (realized by summing uniforms).
    FisBSpline {
        degree: u32,
    },
}

impl Filter {
    /// Normalized taps of the filter at `q`.
    pub fn taps<S: TexelSource + ?Sized>(&self, src: &S, q: &FilterQuery2D) -> Result<Taps> {
        if !q.is_finite() {
            return Err(Error::param("filter query has non-finite components"));
        }
        Ok(match *self {
            Filter::Bilinear => Taps::from_slice(&bilinear_taps(q.st, 0)),
            Filter::BicubicBSpline => separable_taps_2d(&KernelSpec::CubicBSpline, q.st, 0)?,
            Filter::BicubicKeys { a } => separable_taps_2d(&KernelSpec::KeysCubic { a }, q.st, 0)?,
            Filter::Lanczos { lobes } => separable_taps_2d(&KernelSpec::Lanczos { lobes }, q.st, 0)?,
            Filter::Gaussian { sigma, radius } => separable_taps_2d(&KernelSpec::Gaussian { sigma, radius }, q.st, 0)?,
            Filter::Ewa => ewa::ewa_mip_taps(src, q),
            Filter::TrilinearMip => trilinear_mip_taps(src, q),
            Filter::FisGaussian { sigma } => fis_gaussian_taps(q.st, sigma, 0)?,
            Filter::FisBSpline { degree } => fis_bspline_taps(q.st, degree, 0)?,
        })
    }

    pub fn apply<S: TexelSource + ?Sized>(
        &self,
        src: &S,
        q: &FilterQuery2D,
        counter: &mut FetchCounter,
    ) -> Result<Texel> {
        Ok(apply_taps(src, &self.taps(src, q)?, counter))
    }

    /// Filters whose weights are all non-negative.
    pub fn is_non_negative(&self) -> bool {
        !matches!(self, Filter::BicubicKeys { .. } | Filter::Lanczos { .. })
    }
}

/// Isotropic level of detail from the longer derivative vector.
pub fn isotropic_lod(q: &FilterQuery2D, levels: usize) -> f64 {
    let len0 = q.dst0[0].hypot(q.dst0[1]);
    let len1 = q.dst1[0].hypot(q.dst1[1]);
    let lod = len0.max(len1).log2() + q.mip_bias;
    let max = (levels - 1) as f64;
    if lod.is_nan() {
        0.0
    } else {
        lod.clamp(0.0, max)
    }
}

/// Bilinear taps at the two MIP levels bracketing the isotropic LOD, blended
/// by its fraction. Always eight taps.
pub fn trilinear_mip_taps<S: TexelSource + ?Sized>(src: &S, q: &FilterQuery2D) -> Taps {
    let levels = src.levels();
    let lod = isotropic_lod(q, levels);
    let lower = lod.floor() as usize;
    let upper = (lower + 1).min(levels - 1);
    let frac = lod - lower as f64;
    let mut taps = Taps::new();
    for (level, w) in [(lower, 1.0 - frac), (upper, frac)] {
        let st = [level_coord(q.st[0], level), level_coord(q.st[1], level)];
        for mut tap in bilinear_taps(st, level) {
            tap.weight *= w;
            taps.push(tap);
        }
    }
    taps
}

pub fn filter_trilinear_mip<S: TexelSource + ?Sized>(src: &S, q: &FilterQuery2D, counter: &mut FetchCounter) -> Texel {
    apply_taps(src, &trilinear_mip_taps(src, q), counter)
}

/// Deterministic 3D filters over voxel grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeFilter {
    Trilinear,
    TricubicBSpline,
}

impl VolumeFilter {
    pub fn taps(&self, p: [f64; 3]) -> Vec<Tap> {
        match self {
            VolumeFilter::Trilinear => trilinear_taps(p).to_vec(),
            VolumeFilter::TricubicBSpline => {
                separable_taps_3d(&KernelSpec::CubicBSpline, p).expect("B-spline window is always valid")
            }
        }
    }

    pub fn apply<S: TexelSource + ?Sized>(&self, src: &S, p: [f64; 3], counter: &mut FetchCounter) -> Texel {
        match self {
            VolumeFilter::Trilinear => filter_trilinear(src, p, counter),
            VolumeFilter::TricubicBSpline => filter_tricubic_bspline(src, p, counter),
        }
    }

    pub fn tap_count(&self) -> u64 {
        match self {
            VolumeFilter::Trilinear => 8,
            VolumeFilter::TricubicBSpline => 64,
        }
    }
}
