use rayon::prelude::*;
use serde::Serialize;
use stochtex::stats::RunningStats;
use stochtex::{FetchCounter, Filter, FilterQuery2D, RngStream, StochFilter, TexelSource, TextureGrid};

use crate::common::{check_finite, needs_pyramid, pyramid};
use crate::config::{ExperimentConfig, FilterName};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResampleRow {
    pub filter: String,
    pub estimator: String,
    pub spp: u32,
    pub width: usize,
    pub height: usize,
    /// Mean squared difference from the deterministic filter.
    pub mse: f64,
    /// Per-pixel sample variance, averaged over pixels and channels.
    pub mean_pixel_variance: f64,
    pub fetches: u64,
    pub fetches_per_pixel: f64,
}

#[derive(Debug, Clone)]
pub struct ResampleOutput {
    pub image: TextureGrid,
    pub reference: TextureGrid,
    pub row: ResampleRow,
}

struct Pixel {
    value: Vec<f64>,
    reference: Vec<f64>,
    variance: f64,
    fetches: u64,
}

pub const DEFAULT_FILTER: FilterName = FilterName::BicubicBspline;

/// Output size for a scale factor, at least one pixel per axis.
pub fn output_dims(w: usize, h: usize, scale: f64) -> (usize, usize) {
    let side = |n: usize| ((n as f64 * scale).round() as usize).max(1);
    (side(w), side(h))
}

pub fn resample(cfg: &ExperimentConfig, src: &TextureGrid) -> Result<ResampleOutput, CliError> {
    let name = cfg.filter.unwrap_or(DEFAULT_FILTER);
    let (det, stoch) = cfg.estimator_2d(name)?;
    if needs_pyramid(&det) {
        run(cfg, name, &pyramid(src), src, det, stoch)
    } else {
        run(cfg, name, src, src, det, stoch)
    }
}

fn run<S: TexelSource + Sync>(
    cfg: &ExperimentConfig,
    name: FilterName,
    source: &S,
    base: &TextureGrid,
    det: Filter,
    stoch: Option<StochFilter>,
) -> Result<ResampleOutput, CliError> {
    let (w, h) = output_dims(base.width(), base.height(), cfg.scale);
    let sx = w as f64 / base.width() as f64;
    let sy = h as f64 / base.height() as f64;
    let ch = base.channels();
    let pixels: Vec<Pixel> = (0..w * h)
        .into_par_iter()
        .map(|index| {
            let (x, y) = (index % w, index / w);
            let q = FilterQuery2D::at((x as f64 + 0.5) / sx - 0.5, (y as f64 + 0.5) / sy - 0.5)
                .with_derivatives([1.0 / sx, 0.0], [0.0, 1.0 / sy]);
            let mut counter = FetchCounter::new();
            let reference = det.apply(source, &q, &mut counter)?;
            let reference: Vec<f64> = reference.as_slice().to_vec();
            let Some(stoch) = stoch else {
                return Ok(Pixel {
                    value: reference.clone(),
                    reference,
                    variance: 0.0,
                    fetches: counter.count,
                });
            };
            let mut counter = FetchCounter::new();
            let mut stats = vec![RunningStats::new(); ch];
            for i in 0..cfg.spp as u64 {
                let mut rng = RngStream::for_sample(cfg.seed, index as u64, i);
                let est = stoch.estimate(source, &q, &mut rng, &mut counter)?;
                for (s, v) in stats.iter_mut().zip(est.value.as_slice()) {
                    s.push(*v);
                }
            }
            Ok(Pixel {
                value: stats.iter().map(|s| s.mean()).collect(),
                reference,
                variance: stats.iter().map(|s| s.variance()).sum::<f64>() / ch as f64,
                fetches: counter.count,
            })
        })
        .collect::<Result<_, stochtex::Error>>()?;

    let values: Vec<f64> = pixels.iter().flat_map(|p| p.value.iter().copied()).collect();
    let refs: Vec<f64> = pixels.iter().flat_map(|p| p.reference.iter().copied()).collect();
    check_finite("resampled image", &values)?;
    check_finite("reference image", &refs)?;
    let mse = values.iter().zip(&refs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / values.len() as f64;
    let fetches: u64 = pixels.iter().map(|p| p.fetches).sum();
    let row = ResampleRow {
        filter: name.label().to_string(),
        estimator: cfg.estimator.label().to_string(),
        spp: if stoch.is_some() { cfg.spp } else { 1 },
        width: w,
        height: h,
        mse,
        mean_pixel_variance: pixels.iter().map(|p| p.variance).sum::<f64>() / pixels.len() as f64,
        fetches,
        fetches_per_pixel: fetches as f64 / pixels.len() as f64,
    };
    let to_grid = |v: Vec<f64>| -> Result<TextureGrid, CliError> {
        let data = v.into_iter().map(|x| x as f32).collect();
        Ok(TextureGrid::new_2d(w, h, ch, data)
            .map_err(|_| CliError::Numeric("resampled value overflows f32".into()))?
            .with_address_mode(base.address_mode())
            .with_color_space(base.color_space()))
    };
    Ok(ResampleOutput {
        image: to_grid(values)?,
        reference: to_grid(refs)?,
        row,
    })
}
