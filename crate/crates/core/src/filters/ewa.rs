//! Elliptically weighted average filtering.

use std::sync::OnceLock;

use super::{apply_taps, bilinear_taps, compute_aniso_lod, level_coord, Tap, Taps, DEFAULT_MAX_ANISOTROPY};
use crate::texture::{FetchCounter, Texel, TexelSource};
use crate::FilterQuery2D;

pub const EWA_LUT_SIZE: usize = 1024;

/// Gaussian profile `exp(-2 r^2)` tabulated over `r^2` in `[0, 1)`.
pub fn ewa_filter_lut() -> &'static [f64] {
    static LUT: OnceLock<Vec<f64>> = OnceLock::new();
    LUT.get_or_init(|| {
        (0..EWA_LUT_SIZE)
            .map(|i| (-2.0 * i as f64 / EWA_LUT_SIZE as f64).exp())
            .collect()
    })
}

/// Implicit ellipse `A ss^2 + B ss tt + C tt^2 < 1` around a lookup point,
/// with its integer bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwaEllipse {
    pub center: [f64; 2],
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub s_bounds: (i64, i64),
    pub t_bounds: (i64, i64),
}

impl EwaEllipse {
    /// Ellipse from screen-space derivatives in raster units. The `+ 1`
    /// terms guarantee the ellipse covers at least a unit disc.
    pub fn new(st: [f64; 2], dst0: [f64; 2], dst1: [f64; 2]) -> Self {
        let sqr = |x: f64| x * x;
        let mut a = sqr(dst0[1]) + sqr(dst1[1]) + 1.0;
        let mut b = -2.0 * (dst0[0] * dst0[1] + dst1[0] * dst1[1]);
        let mut c = sqr(dst0[0]) + sqr(dst1[0]) + 1.0;
        let inv_f = 1.0 / (a * c - sqr(b) * 0.25);
        a *= inv_f;
        b *= inv_f;
        c *= inv_f;

        let det = -sqr(b) + 4.0 * a * c;
        let inv_det = 1.0 / det;
        let u_sqrt = (det * c).max(0.0).sqrt();
        let v_sqrt = (a * det).max(0.0).sqrt();
        EwaEllipse {
            center: st,
            a,
            b,
            c,
            s_bounds: (
                (st[0] - 2.0 * inv_det * u_sqrt).ceil() as i64,
                (st[0] + 2.0 * inv_det * u_sqrt).floor() as i64,
            ),
            t_bounds: (
                (st[1] - 2.0 * inv_det * v_sqrt).ceil() as i64,
                (st[1] + 2.0 * inv_det * v_sqrt).floor() as i64,
            ),
        }
    }

    #[inline]
    pub fn r2(&self, is: i64, it: i64) -> f64 {
        let ss = is as f64 - self.center[0];
        let tt = it as f64 - self.center[1];
        self.a * ss * ss + self.b * ss * tt + self.c * tt * tt
    }

    /// Visits every texel with `r^2 < 1` and a positive LUT weight, in scan
    /// order (rows of t, then s).
    #[inline]
    pub fn for_each_weight(&self, mut visit: impl FnMut(i64, i64, f64)) {
        let lut = ewa_filter_lut();
        for it in self.t_bounds.0..=self.t_bounds.1 {
            for is in self.s_bounds.0..=self.s_bounds.1 {
                let r2 = self.r2(is, it);
                if r2 >= 1.0 {
                    continue;
                }
                let index = ((r2 * EWA_LUT_SIZE as f64) as usize).min(EWA_LUT_SIZE - 1);
                let weight = lut[index];
                if weight <= 0.0 {
                    continue;
                }
                visit(is, it, weight);
            }
        }
    }
}

/// Normalized EWA taps at one level; `st` and the derivatives are in that
/// level's raster units.
pub fn ewa_taps(st: [f64; 2], dst0: [f64; 2], dst1: [f64; 2], level: usize) -> Taps {
    let ellipse = EwaEllipse::new(st, dst0, dst1);
    let mut taps = Taps::new();
    let mut total = 0.0;
    ellipse.for_each_weight(|is, it, weight| {
        total += weight;
        taps.push(Tap {
            coord: [is, it, 0],
            level,
            weight,
        });
    });
    let inv = 1.0 / total;
    taps.iter_mut().for_each(|t| t.weight *= inv);
    taps
}

/// Single-level EWA. Zero derivatives fall back to bilinear.
pub fn filter_ewa<S: TexelSource + ?Sized>(src: &S, q: &FilterQuery2D, counter: &mut FetchCounter) -> Texel {
    if q.has_zero_derivatives() {
        return apply_taps(src, &bilinear_taps(q.st, 0), counter);
    }
    apply_taps(src, &ewa_taps(q.st, q.dst0, q.dst1, 0), counter)
}

/// Level choice for MIP-mapped EWA: the two levels bracketing the minor-axis
/// LOD with their blend weights, and the clamped footprint axes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EwaLevels {
    pub lod: f64,
    pub major: [f64; 2],
    pub minor: [f64; 2],
}

impl EwaLevels {
    pub fn new<S: TexelSource + ?Sized>(src: &S, q: &FilterQuery2D) -> Self {
        let max = (src.levels() - 1) as f64;
        let grads = [q.dst0[0], q.dst0[1], q.dst1[0], q.dst1[1]];
        let l = compute_aniso_lod([1, 1], grads, f64::NEG_INFINITY, f64::INFINITY, DEFAULT_MAX_ANISOTROPY);
        let lod = (l.lod + q.mip_bias).clamp(0.0, max);
        EwaLevels {
            lod,
            major: l.major_axis,
            minor: l.minor_axis,
        }
    }

    /// Footprint ellipse in the raster space of `level`.
    pub fn ellipse_at(&self, q: &FilterQuery2D, level: usize) -> EwaEllipse {
        let scale = 1.0 / (1u64 << level) as f64;
        let st = [level_coord(q.st[0], level), level_coord(q.st[1], level)];
        let major = [self.major[0] * scale, self.major[1] * scale];
        let minor = [self.minor[0] * scale, self.minor[1] * scale];
        EwaEllipse::new(st, major, minor)
    }
}

pub(crate) fn ewa_mip_taps<S: TexelSource + ?Sized>(src: &S, q: &FilterQuery2D) -> Taps {
    if q.has_zero_derivatives() {
        return Taps::from_slice(&bilinear_taps(q.st, 0));
    }
    let levels = EwaLevels::new(src, q);
    let lower = levels.lod.floor() as usize;
    let frac = levels.lod - lower as f64;
    let mut taps = Taps::new();
    for (level, blend) in [(lower, 1.0 - frac), (lower + 1, frac)] {
        if blend <= 0.0 {
            continue;
        }
        let ellipse = levels.ellipse_at(q, level);
        let mut total = 0.0;
        let start = taps.len();
        ellipse.for_each_weight(|is, it, weight| {
            total += weight;
            taps.push(Tap {
                coord: [is, it, 0],
                level,
                weight,
            });
        });
        let k = blend / total;
        taps[start..].iter_mut().for_each(|t| t.weight *= k);
    }
    taps
}

/// MIP-mapped EWA: ellipses at the two levels around the minor-axis LOD,
/// linearly blended.
pub fn filter_ewa_mip<S: TexelSource + ?Sized>(src: &S, q: &FilterQuery2D, counter: &mut FetchCounter) -> Texel {
    apply_taps(src, &ewa_mip_taps(src, q), counter)
}
