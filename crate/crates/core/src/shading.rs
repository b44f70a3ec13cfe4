//! Scalar shading maps and the two orders of filtering and shading.
//!
//! Filtering before shading computes `g(sum w_i t_i)`; filtering after
//! shading computes `sum w_i g(t_i)`. The two agree only when `g` is affine.
//! A single-tap stochastic filter evaluates `g` at the sampled texel, so its
//! expectation is the filter-after-shading result.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::filters::{Filter, FilterQuery2D};
use crate::stats::RunningStats;
use crate::stochastic::{RngStream, StochFilter};
use crate::texture::{FetchCounter, Texel, TexelSource};
use crate::{Error, Result};

/// Default constant of [`ShadingMap::PlanckLike`]. Spans four orders of
/// magnitude over texture values in `[0.1, 1]`.
pub const DEFAULT_PLANCK_C: f64 = 1.0;

/// A pointwise map from a texture value to a shaded value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShadingMap {
    Identity,
    /// `scale * x + offset`.
    Affine {
        scale: f64,
        offset: f64,
    },
    /// `max(x, 0)^k`.
    Power {
        k: f64,
    },
    /// `exp(scale * x)`.
    Exp {
        scale: f64,
    },
    /// Planck-style emission `1 / (exp(c / x) - 1)`, zero for `x <= 0`.
    PlanckLike {
        c: f64,
    },
    /// 1 when `x > theta`, else 0.
    Threshold {
        theta: f64,
    },
    /// Linear blend between two responses by a metalness value.
    MetalnessMix {
        diffuse: f64,
        specular: f64,
    },
}

impl ShadingMap {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            ShadingMap::Identity => x,
            ShadingMap::Affine { scale, offset } => scale * x + offset,
            ShadingMap::Power { k } => x.max(0.0).powf(k),
            ShadingMap::Exp { scale } => (scale * x).exp(),
            ShadingMap::PlanckLike { c } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 / (c / x).exp_m1()
                }
            }
            ShadingMap::Threshold { theta } => {
                if x > theta {
                    1.0
                } else {
                    0.0
                }
            }
            ShadingMap::MetalnessMix { diffuse, specular } => diffuse + (specular - diffuse) * x,
        }
    }

    /// Maps for which both filtering orders agree.
    pub fn is_affine(&self) -> bool {
        match *self {
            ShadingMap::Identity | ShadingMap::Affine { .. } | ShadingMap::MetalnessMix { .. } => true,
            ShadingMap::Power { k } => k == 0.0 || k == 1.0,
            ShadingMap::Exp { scale } => scale == 0.0,
            _ => false,
        }
    }

    /// Maps convex on non-negative inputs.
    pub fn is_convex(&self) -> bool {
        match *self {
            ShadingMap::Power { k } => k >= 1.0,
            ShadingMap::Exp { .. } => true,
            ref m => m.is_affine(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ShadingMap::Identity => true,
            ShadingMap::Affine { scale, offset } => scale.is_finite() && offset.is_finite(),
            ShadingMap::Power { k } => k.is_finite() && k >= 0.0,
            ShadingMap::Exp { scale } => scale.is_finite(),
            ShadingMap::PlanckLike { c } => c.is_finite() && c > 0.0,
            ShadingMap::Threshold { theta } => theta.is_finite(),
            ShadingMap::MetalnessMix { diffuse, specular } => diffuse.is_finite() && specular.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid shading map parameters: {self}")))
        }
    }
}

impl fmt::Display for ShadingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ShadingMap::Identity => write!(f, "identity"),
            ShadingMap::Affine { scale, offset } => write!(f, "affine:{scale},{offset}"),
            ShadingMap::Power { k } => write!(f, "power:{k}"),
            ShadingMap::Exp { scale } => write!(f, "exp:{scale}"),
            ShadingMap::PlanckLike { c } => write!(f, "planck:{c}"),
            ShadingMap::Threshold { theta } => write!(f, "threshold:{theta}"),
            ShadingMap::MetalnessMix { diffuse, specular } => write!(f, "metalness:{diffuse},{specular}"),
        }
    }
}

/// Parses `identity`, `affine:a,b`, `power:k`, `exp:s`, `planck[:c]`,
/// `threshold:t` and `metalness:d,s`.
impl FromStr for ShadingMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let nums = |expect: usize| -> Result<Vec<f64>> {
            let a = args.ok_or_else(|| Error::param(format!("shading map '{name}' needs {expect} parameter(s)")))?;
            let v = a
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::param(format!("bad shading map parameter in '{s}': {e}")))?;
            if v.len() != expect {
                return Err(Error::param(format!(
                    "shading map '{name}' needs {expect} parameter(s)"
                )));
            }
            Ok(v)
        };
        let map = match name.trim().to_ascii_lowercase().as_str() {
            "identity" if args.is_none() => ShadingMap::Identity,
            "affine" => {
                let v = nums(2)?;
                ShadingMap::Affine {
                    scale: v[0],
                    offset: v[1],
                }
            }
            "power" => ShadingMap::Power { k: nums(1)?[0] },
            "exp" => ShadingMap::Exp { scale: nums(1)?[0] },
            "planck" if args.is_none() => ShadingMap::PlanckLike { c: DEFAULT_PLANCK_C },
            "planck" => ShadingMap::PlanckLike { c: nums(1)?[0] },
            "threshold" => ShadingMap::Threshold { theta: nums(1)?[0] },
            "metalness" => {
                let v = nums(2)?;
                ShadingMap::MetalnessMix {
                    diffuse: v[0],
                    specular: v[1],
                }
            }
            _ => return Err(Error::param(format!("unknown shading map '{s}'"))),
        };
        map.validate()?;
        Ok(map)
    }
}

/// Filter first, then shade: `g(filter(t))`, per channel.
pub fn shade_filter_before<S: TexelSource + ?Sized>(
    src: &S,
    q: &FilterQuery2D,
    filter: &Filter,
    g: &ShadingMap,
) -> Result<Texel> {
    let v = filter.apply(src, q, &mut FetchCounter::new())?;
    Ok(v.map(|x| g.apply(x)))
}

/// Shade every tap, then filter: `sum w_i g(t_i)`, per channel.
pub fn shade_filter_after_ref<S: TexelSource + ?Sized>(
    src: &S,
    q: &FilterQuery2D,
    filter: &Filter,
    g: &ShadingMap,
) -> Result<Texel> {
    let taps = filter.taps(src, q)?;
    let mut acc = Texel::zero(src.channels());
    let mut counter = FetchCounter::new();
    for tap in &taps {
        let t = src.fetch(tap.level, tap.coord, &mut counter).map(|x| g.apply(x));
        acc.add_scaled(&t, tap.weight);
    }
    Ok(acc)
}

/// One stochastic sample of the shade-then-filter result.
pub fn shade_filter_after_stoch<S: TexelSource + ?Sized>(
    src: &S,
    q: &FilterQuery2D,
    filter: &StochFilter,
    g: &ShadingMap,
    rng: &mut RngStream,
) -> Result<Texel> {
    let sel = filter.select(src, q, rng)?;
    Ok(sel.evaluate_mapped(src, &mut FetchCounter::new(), |x| g.apply(x)).value)
}

/// One line of the filtering-order comparison, channel-averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub query_u: f64,
    pub query_v: f64,
    pub before: f64,
    pub after_ref: f64,
    pub after_stoch_mean: f64,
    pub after_stoch_sem: f64,
    pub abs_diff: f64,
}

/// Compares both filtering orders at one query, with `spp` stochastic
/// samples drawn from streams keyed by `(seed, index)`.
pub fn order_row<S: TexelSource + ?Sized>(
    src: &S,
    g: &ShadingMap,
    filter: &Filter,
    q: &FilterQuery2D,
    spp: u64,
    seed: u64,
    index: u64,
) -> Result<OrderRow> {
    let before = shade_filter_before(src, q, filter, g)?.mean();
    let after_ref = shade_filter_after_ref(src, q, filter, g)?.mean();
    let stoch = StochFilter::from(*filter);
    let mut stats = RunningStats::new();
    for i in 0..spp {
        let mut rng = RngStream::for_sample(seed, index, i);
        stats.push(shade_filter_after_stoch(src, q, &stoch, g, &mut rng)?.mean());
    }
    Ok(OrderRow {
        query_u: q.st[0],
        query_v: q.st[1],
        before,
        after_ref,
        after_stoch_mean: stats.mean(),
        after_stoch_sem: stats.sem(),
        abs_diff: (before - after_ref).abs(),
    })
}

/// [`order_row`] over a list of queries.
pub fn order_divergence_report<S: TexelSource + ?Sized>(
    src: &S,
    g: &ShadingMap,
    filter: &Filter,
    queries: &[FilterQuery2D],
    spp: u64,
    seed: u64,
) -> Result<Vec<OrderRow>> {
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| order_row(src, g, filter, q, spp, seed, i as u64))
        .collect()
}
