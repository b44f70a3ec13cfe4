//! Single-tap estimators for the filters in [`crate::filters`].
//!
//! Each function turns a lookup point and uniform(s) into the integer
//! coordinate of the texel to read. The texel value, unweighted, is an
//! unbiased estimate of the corresponding deterministic filter. Functions
//! that take one uniform return the remapped uniform alongside the tap so it
//! can drive further decisions.

use std::f64::consts::PI;

use super::sampling::{sample_discrete, sample_discrete_with_total, sample_reuse, DiscreteSampleResult, Reservoir};
use crate::filters::split;
use crate::kernels::KernelSpec;
use crate::Result;

/// Cubic B-spline weights for taps at offsets -1, 0, 1, 2 of a lookup with
/// fractional part `t`.
#[inline]
pub fn bspline_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        (1.0 / 6.0) * (-t3 + 3.0 * t2 - 3.0 * t + 1.0),
        (1.0 / 6.0) * (3.0 * t3 - 6.0 * t2 + 4.0),
        (1.0 / 6.0) * (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0),
        (1.0 / 6.0) * t3,
    ]
}

/// Bilinear estimator: one Bernoulli decision per axis from a single
/// uniform.
#[inline]
pub fn stoch_bilinear(st: [f64; 2], xi: f64) -> ([i64; 2], f64) {
    let (mut s, ds) = split(st[0]);
    let (mut t, dt) = split(st[1]);
    let (step_s, xi) = sample_reuse(xi, ds);
    s += step_s as i64;
    let (step_t, xi) = sample_reuse(xi, dt);
    t += step_t as i64;
    ([s, t], xi)
}

/// Trilinear estimator over a voxel grid.
#[inline]
pub fn stoch_trilinear(p: [f64; 3], xi: f64) -> ([i64; 3], f64) {
    let mut xi = xi;
    let coord = std::array::from_fn(|axis| {
        let (base, frac) = split(p[axis]);
        let (step, next) = sample_reuse(xi, frac);
        xi = next;
        base + step as i64
    });
    (coord, xi)
}

/// Bicubic B-spline estimator: per axis, one of the four taps is picked by
/// CDF inversion over the B-spline weights.
#[inline]
pub fn stoch_bicubic_bspline(st: [f64; 2], xi: f64) -> ([i64; 2], f64) {
    let (s0, fs) = split(st[0]);
    let (t0, ft) = split(st[1]);
    let ws = bspline_weights(fs);
    let wt = bspline_weights(ft);
    let a = sample_discrete_with_total(&ws, ws.iter().sum(), xi);
    let b = sample_discrete_with_total(&wt, wt.iter().sum(), a.xi);
    ([s0 - 1 + a.index as i64, t0 - 1 + b.index as i64], b.xi)
}

/// Tricubic B-spline estimator using per-axis weighted reservoir sampling,
/// so the weights are consumed as they are computed.
#[inline]
pub fn stoch_tricubic_bspline(p: [f64; 3], xi: f64) -> ([i64; 3], f64) {
    let mut xi = xi;
    let coord = std::array::from_fn(|axis| {
        let (base, frac) = split(p[axis]);
        let mut res = Reservoir::new();
        for (i, w) in bspline_weights(frac).into_iter().enumerate() {
            res.push(i, w, &mut xi);
        }
        base - 1 + res.selected().unwrap_or(1) as i64
    });
    (coord, xi)
}

/// Two-tap positivized sample of a separable kernel with negative lobes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivizedTaps {
    pub positive: [i64; 2],
    pub positive_sum: f64,
    /// Absent when every weight in the window is non-negative.
    pub negative: Option<[i64; 2]>,
    pub negative_sum: f64,
    pub xi: f64,
}

/// Positivized estimator for a separable 2D kernel (Keys cubic, Lanczos):
/// the full window is scanned once, routing each weight to a positive or a
/// negative reservoir that share one reused uniform.
pub fn stoch_separable_positivized(spec: &KernelSpec, st: [f64; 2], xi: f64) -> Result<PositivizedTaps> {
    let (x0, wx) = crate::filters::axis_window(spec, st[0])?;
    let (y0, wy) = crate::filters::axis_window(spec, st[1])?;
    let mut pos = Reservoir::new();
    let mut neg = Reservoir::new();
    let mut xi = xi;
    let nx = wx.len();
    for (j, &w_y) in wy.weights.iter().enumerate() {
        for (i, &w_x) in wx.weights.iter().enumerate() {
            let w = w_x * w_y;
            let index = j * nx + i;
            if w < 0.0 {
                neg.push(index, -w, &mut xi);
            } else {
                pos.push(index, w, &mut xi);
            }
        }
    }
    let at = |index: usize| [x0 + (index % nx) as i64, y0 + (index / nx) as i64];
    let positive = pos
        .selected()
        .map(at)
        .ok_or_else(|| crate::Error::param("window has no positive weight"))?;
    Ok(PositivizedTaps {
        positive,
        positive_sum: pos.total(),
        negative: neg.selected().map(at),
        negative_sum: neg.total(),
        xi,
    })
}

/// Positivized Keys bicubic estimator.
pub fn stoch_bicubic_keys(st: [f64; 2], a: f64, xi: f64) -> Result<PositivizedTaps> {
    stoch_separable_positivized(&KernelSpec::KeysCubic { a }, st, xi)
}

/// Picks a MIP level so that the expected level blend equals linear
/// interpolation between the levels around `lod`. Equivalent to
/// `floor(lod + xi)` after clamping `lod` to the pyramid.
#[inline]
pub fn stoch_mip_level(lod: f64, xi: f64, levels: usize) -> (usize, f64) {
    let max = (levels.max(1) - 1) as f64;
    let lod = if lod.is_nan() { 0.0 } else { lod.clamp(0.0, max) };
    let lower = lod.floor();
    let frac = lod - lower;
    let (stay, xi) = sample_reuse(xi, 1.0 - frac);
    (lower as usize + (!stay) as usize, xi)
}

/// Box-Muller transform of two uniforms to a pair of standard normals.
#[inline]
pub fn box_muller(xi1: f64, xi2: f64) -> [f64; 2] {
    let mag = (-2.0 * (1.0 - xi1).ln()).sqrt();
    let phi = 2.0 * PI * xi2;
    [mag * phi.cos(), mag * phi.sin()]
}

/// Nearest texel to `s + offset`.
#[inline]
fn nearest(s: f64) -> i64 {
    (s + 0.5).floor() as i64
}

/// Gaussian filter importance sampling followed by a nearest lookup. The
/// realized filter is the Gaussian convolved with a unit box.
#[inline]
pub fn fis_gaussian(st: [f64; 2], sigma: f64, xi1: f64, xi2: f64) -> [i64; 2] {
    let [ox, oy] = box_muller(xi1, xi2);
    [nearest(st[0] + sigma * ox), nearest(st[1] + sigma * oy)]
}

/// Discrete Gaussian over the `2 ceil(radius)`-square window around `st`,
/// sampled with a 2D weighted reservoir. With `radius = 2` this is the usual
/// 4x4 window.
pub fn discrete_gaussian_sample(st: [f64; 2], sigma: f64, radius: f64, xi: f64) -> Result<([i64; 2], f64)> {
    let spec = KernelSpec::Gaussian { sigma, radius };
    let (bx, fx) = split(st[0]);
    let (by, fy) = split(st[1]);
    let taps = spec.min_taps();
    let wx = spec.window(fx, taps)?;
    let wy = spec.window(fy, taps)?;
    let mut res = Reservoir::new();
    let mut xi = xi;
    for (j, &w_y) in wy.weights.iter().enumerate() {
        for (i, &w_x) in wx.weights.iter().enumerate() {
            res.push(j * taps + i, w_x * w_y, &mut xi);
        }
    }
    // sigma far below a texel can underflow every weight but the nearest
    let index = res.selected().unwrap_or_else(|| {
        let i = (taps / 2 - 1) + (fx >= 0.5) as usize;
        let j = (taps / 2 - 1) + (fy >= 0.5) as usize;
        j * taps + i
    });
    let first = wx.first_offset;
    Ok((
        [bx + first + (index % taps) as i64, by + first + (index / taps) as i64],
        xi,
    ))
}

/// B-spline filter importance sampling: per axis, the offset is the sum of
/// `xis.len()` uniforms re-centred on zero, followed by a nearest lookup.
/// The realized filter is the cardinal B-spline of degree `xis.len()`.
pub fn fis_bspline(st: [f64; 2], xis: &[[f64; 2]]) -> [i64; 2] {
    let n = xis.len() as f64;
    let mut offset = [-0.5 * n; 2];
    for x in xis {
        offset[0] += x[0];
        offset[1] += x[1];
    }
    [nearest(st[0] + offset[0]), nearest(st[1] + offset[1])]
}

/// Chooses one branch of a weighted blend so that only that branch needs
/// evaluating.
pub fn stoch_blend(weights: &[f64], xi: f64) -> Result<DiscreteSampleResult> {
    sample_discrete(weights, xi)
}
