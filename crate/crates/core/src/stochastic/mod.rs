//! Stochastic texture filtering.
//!
//! Instead of blending every tap of a filter, a stochastic filter picks one
//! tap with probability proportional to its weight (or two for kernels with
//! negative lobes) and returns that texel. The expected value equals the
//! deterministic filter, and any nonlinear shading applied to the texel is
//! then applied before filtering.

mod estimators;
mod rng;
mod sampling;

#[cfg(test)]
mod tests;

pub use estimators::{
    box_muller, bspline_weights, discrete_gaussian_sample, fis_bspline, fis_gaussian, stoch_bicubic_bspline,
    stoch_bicubic_keys, stoch_bilinear, stoch_blend, stoch_mip_level, stoch_separable_positivized,
    stoch_tricubic_bspline, stoch_trilinear, PositivizedTaps,
};
pub use rng::{RngStream, ONE_MINUS_EPSILON};
pub use sampling::{
    positivized_sample, reservoir_sample, sample_discrete, sample_reuse, stoch_lerp, DiscreteSampleResult,
    PositivizedSample, Reservoir,
};

use serde::{Deserialize, Serialize};

use crate::filters::{level_coord, split, EwaLevels, Filter, FilterQuery2D, Tap, VolumeFilter};
use crate::kernels::KernelSpec;
use crate::texture::{FetchCounter, Texel, TexelSource};
use crate::{Error, Result};

/// The taps chosen by one stochastic filter invocation: a single tap of
/// weight one, or a positive and a negative tap with signed weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapSelection {
    taps: [Tap; 2],
    len: u8,
}

impl TapSelection {
    pub fn single(coord: [i64; 3], level: usize) -> Self {
        let tap = Tap {
            coord,
            level,
            weight: 1.0,
        };
        TapSelection {
            taps: [tap, tap],
            len: 1,
        }
    }

    /// Positivized pair; the negative tap carries weight `-negative_sum`.
    pub fn positivized(p: &PositivizedTaps, level: usize) -> Self {
        let positive = Tap {
            coord: [p.positive[0], p.positive[1], 0],
            level,
            weight: p.positive_sum,
        };
        match p.negative {
            Some(n) => TapSelection {
                taps: [
                    positive,
                    Tap {
                        coord: [n[0], n[1], 0],
                        level,
                        weight: -p.negative_sum,
                    },
                ],
                len: 2,
            },
            None => TapSelection {
                taps: [positive, positive],
                len: 1,
            },
        }
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps[..self.len as usize]
    }

    /// Reads the selected texels and combines them with their weights.
    pub fn evaluate<S: TexelSource + ?Sized>(&self, src: &S, counter: &mut FetchCounter) -> TapEstimate {
        self.evaluate_mapped(src, counter, |x| x)
    }

    /// Like [`TapSelection::evaluate`], applying `g` to every channel of each
    /// texel before weighting.
    pub fn evaluate_mapped<S: TexelSource + ?Sized>(
        &self,
        src: &S,
        counter: &mut FetchCounter,
        g: impl Fn(f64) -> f64,
    ) -> TapEstimate {
        let before = counter.count;
        let mut value = Texel::zero(src.channels());
        for tap in self.taps() {
            let t = src.fetch(tap.level, tap.coord, counter).map(&g);
            value.add_scaled(&t, tap.weight);
        }
        TapEstimate {
            selection: *self,
            value,
            fetches: counter.count - before,
        }
    }
}

/// Result of a stochastic lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapEstimate {
    pub selection: TapSelection,
    pub value: Texel,
    pub fetches: u64,
}

/// Stochastic counterparts of [`Filter`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StochFilter {
    /// One Bernoulli decision per axis.
    Bilinear,
    /// Per-axis CDF inversion over the cubic B-spline weights.
    BicubicBSpline,
    /// Positivized Keys cubic, up to two taps.
    BicubicKeys { a: f64 },
    /// Positivized Lanczos, up to two taps.
    Lanczos { lobes: u32 },
    /// Reservoir sampling of the truncated discrete Gaussian window.
    DiscreteGaussian { sigma: f64, radius: f64 },
    /// Stochastic level choice, then reservoir sampling inside the ellipse.
    Ewa,
    /// Stochastic level choice, then stochastic bilinear.
    TrilinearMip,
    /// Continuous Gaussian offset with a nearest lookup.
    FisGaussian { sigma: f64 },
    /// Sum-of-uniforms offset with a nearest lookup.
    FisBSpline { degree: u32 },
}

impl From<Filter> for StochFilter {
    fn from(f: Filter) -> Self {
        match f {
            Filter::Bilinear => StochFilter::Bilinear,
            Filter::BicubicBSpline => StochFilter::BicubicBSpline,
            Filter::BicubicKeys { a } => StochFilter::BicubicKeys { a },
            Filter::Lanczos { lobes } => StochFilter::Lanczos { lobes },
            Filter::Gaussian { sigma, radius } => StochFilter::DiscreteGaussian { sigma, radius },
            Filter::Ewa => StochFilter::Ewa,
            Filter::TrilinearMip => StochFilter::TrilinearMip,
            Filter::FisGaussian { sigma } => StochFilter::FisGaussian { sigma },
            Filter::FisBSpline { degree } => StochFilter::FisBSpline { degree },
        }
    }
}

impl StochFilter {
    /// The deterministic filter this estimator is unbiased for.
    pub fn reference(&self) -> Filter {
        match *self {
            StochFilter::Bilinear => Filter::Bilinear,
            StochFilter::BicubicBSpline => Filter::BicubicBSpline,
            StochFilter::BicubicKeys { a } => Filter::BicubicKeys { a },
            StochFilter::Lanczos { lobes } => Filter::Lanczos { lobes },
            StochFilter::DiscreteGaussian { sigma, radius } => Filter::Gaussian { sigma, radius },
            StochFilter::Ewa => Filter::Ewa,
            StochFilter::TrilinearMip => Filter::TrilinearMip,
            StochFilter::FisGaussian { sigma } => Filter::FisGaussian { sigma },
            StochFilter::FisBSpline { degree } => Filter::FisBSpline { degree },
        }
    }

    /// Texel reads per invocation, at most.
    pub fn max_fetches(&self) -> u64 {
        match self {
            StochFilter::BicubicKeys { .. } | StochFilter::Lanczos { .. } => 2,
            _ => 1,
        }
    }

    /// Picks the taps for one lookup, drawing uniforms from `rng`.
    pub fn select<S: TexelSource + ?Sized>(
        &self,
        src: &S,
        q: &FilterQuery2D,
        rng: &mut RngStream,
    ) -> Result<TapSelection> {
        if !q.is_finite() {
            return Err(Error::param("filter query has non-finite components"));
        }
        let single2 = |c: [i64; 2], level| TapSelection::single([c[0], c[1], 0], level);
        Ok(match *self {
            StochFilter::Bilinear => single2(stoch_bilinear(q.st, rng.uniform()).0, 0),
            StochFilter::BicubicBSpline => single2(stoch_bicubic_bspline(q.st, rng.uniform()).0, 0),
            StochFilter::BicubicKeys { a } => {
                TapSelection::positivized(&stoch_bicubic_keys(q.st, a, rng.uniform())?, 0)
            }
            StochFilter::Lanczos { lobes } => TapSelection::positivized(
                &stoch_separable_positivized(&KernelSpec::Lanczos { lobes }, q.st, rng.uniform())?,
                0,
            ),
            StochFilter::DiscreteGaussian { sigma, radius } => {
                single2(discrete_gaussian_sample(q.st, sigma, radius, rng.uniform())?.0, 0)
            }
            StochFilter::Ewa => select_ewa(src, q, rng.uniform()),
            StochFilter::TrilinearMip => {
                let lod = crate::filters::isotropic_lod(q, src.levels());
                let (level, xi) = stoch_mip_level(lod, rng.uniform(), src.levels());
                let st = [level_coord(q.st[0], level), level_coord(q.st[1], level)];
                single2(stoch_bilinear(st, xi).0, level)
            }
            StochFilter::FisGaussian { sigma } => {
                KernelSpec::gaussian(sigma).validate()?;
                let xi1 = rng.uniform();
                let xi2 = rng.uniform();
                single2(fis_gaussian(q.st, sigma, xi1, xi2), 0)
            }
            StochFilter::FisBSpline { degree } => {
                if degree == 0 {
                    return Err(Error::param("B-spline FIS degree must be at least 1"));
                }
                let xis: Vec<[f64; 2]> = (0..degree).map(|_| [rng.uniform(), rng.uniform()]).collect();
                single2(fis_bspline(q.st, &xis), 0)
            }
        })
    }

    /// Selects taps and reads them.
    pub fn estimate<S: TexelSource + ?Sized>(
        &self,
        src: &S,
        q: &FilterQuery2D,
        rng: &mut RngStream,
        counter: &mut FetchCounter,
    ) -> Result<TapEstimate> {
        Ok(self.select(src, q, rng)?.evaluate(src, counter))
    }
}

fn select_ewa<S: TexelSource + ?Sized>(src: &S, q: &FilterQuery2D, xi: f64) -> TapSelection {
    if q.has_zero_derivatives() {
        let (c, _) = stoch_bilinear(q.st, xi);
        return TapSelection::single([c[0], c[1], 0], 0);
    }
    let levels = EwaLevels::new(src, q);
    let (level, mut xi) = stoch_mip_level(levels.lod, xi, src.levels());
    let ellipse = levels.ellipse_at(q, level);
    let mut res = Reservoir::new();
    let mut chosen = [0i64; 2];
    let mut count = 0usize;
    ellipse.for_each_weight(|is, it, w| {
        res.push(count, w, &mut xi);
        if res.selected() == Some(count) {
            chosen = [is, it];
        }
        count += 1;
    });
    if res.selected().is_none() {
        // degenerate ellipse with no texel inside: fall back to the nearest
        let (s, fs) = split(ellipse.center[0]);
        let (t, ft) = split(ellipse.center[1]);
        chosen = [s + (fs >= 0.5) as i64, t + (ft >= 0.5) as i64];
    }
    TapSelection::single([chosen[0], chosen[1], 0], level)
}

impl VolumeFilter {
    /// Single-tap stochastic selection for a 3D lookup.
    pub fn select(&self, p: [f64; 3], xi: f64) -> TapSelection {
        let coord = match self {
            VolumeFilter::Trilinear => stoch_trilinear(p, xi).0,
            VolumeFilter::TricubicBSpline => stoch_tricubic_bspline(p, xi).0,
        };
        TapSelection::single(coord, 0)
    }

    pub fn estimate<S: TexelSource + ?Sized>(
        &self,
        src: &S,
        p: [f64; 3],
        xi: f64,
        counter: &mut FetchCounter,
    ) -> TapEstimate {
        self.select(p, xi).evaluate(src, counter)
    }
}
