use rayon::prelude::*;
use serde::Serialize;
use stochtex::{FetchCounter, RngStream, TextureGrid, VolumeFilter};

use crate::common::{check_finite, Input};
use crate::config::{Estimator, ExperimentConfig, FilterName};
use crate::converge::VOLUME_FILTERS;
use crate::error::CliError;

/// Keeps the reference streams disjoint from the measured ones.
const REFERENCE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeRow {
    pub filter: String,
    pub det_fetches_per_query: f64,
    pub stoch_fetches_per_query: f64,
    pub fetch_ratio: f64,
    pub det_mse: f64,
    pub stoch_mse: f64,
    /// `stoch_mse / det_mse`.
    pub mse_ratio: f64,
    pub spp: u32,
    pub ref_spp: u32,
    pub size: u32,
}

#[derive(Debug, Clone)]
pub struct VolumeOutput {
    pub rows: Vec<VolumeRow>,
    /// Projection of the first listed filter with the configured estimator.
    pub image: TextureGrid,
}

/// A `size x size` orthographic projection along z. Each sample jitters
/// within the pixel footprint and picks a uniform depth, so every pixel is
/// the mean density through its column.
pub struct Projection<'a> {
    pub volume: &'a TextureGrid,
    pub size: usize,
}

impl Projection<'_> {
    fn point(&self, pixel: usize, u: [f64; 3]) -> [f64; 3] {
        let v = self.volume;
        let (x, y) = ((pixel % self.size) as f64, (pixel / self.size) as f64);
        let s = self.size as f64;
        [
            (x + u[0]) * v.width() as f64 / s - 0.5,
            (y + u[1]) * v.height() as f64 / s - 0.5,
            u[2] * v.depth() as f64 - 0.5,
        ]
    }

    /// Renders the projection, returning per-channel pixel values and the
    /// fetch count. Position uniforms are shared between the deterministic
    /// and stochastic estimators for a given `(seed, pixel, sample)`.
    pub fn render(&self, f: VolumeFilter, stochastic: bool, spp: u32, seed: u64) -> (Vec<f64>, u64) {
        let ch = self.volume.channels();
        let pixels: Vec<(Vec<f64>, u64)> = (0..self.size * self.size)
            .into_par_iter()
            .map(|pixel| {
                let mut counter = FetchCounter::new();
                let mut acc = vec![0.0; ch];
                for i in 0..spp as u64 {
                    let mut rng = RngStream::for_sample(seed, pixel as u64, i);
                    let u = [rng.uniform(), rng.uniform(), rng.uniform()];
                    let xi = rng.uniform();
                    let p = self.point(pixel, u);
                    let t = if stochastic {
                        f.estimate(self.volume, p, xi, &mut counter).value
                    } else {
                        f.apply(self.volume, p, &mut counter)
                    };
                    for (a, v) in acc.iter_mut().zip(t.as_slice()) {
                        *a += v;
                    }
                }
                acc.iter_mut().for_each(|a| *a /= spp as f64);
                (acc, counter.count)
            })
            .collect();
        let fetches = pixels.iter().map(|p| p.1).sum();
        (pixels.into_iter().flat_map(|p| p.0).collect(), fetches)
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

pub fn volume(cfg: &ExperimentConfig, input: &Input) -> Result<VolumeOutput, CliError> {
    let Input::Volume(v) = input else {
        return Err(CliError::Usage("the volume command needs an STXV volume input".into()));
    };
    if cfg.estimator == Estimator::Fis {
        return Err(CliError::Usage("volume filters have no FIS estimator".into()));
    }
    let names: Vec<FilterName> = cfg.filter.map(|f| vec![f]).unwrap_or_else(|| VOLUME_FILTERS.to_vec());
    let proj = Projection {
        volume: v,
        size: cfg.size as usize,
    };
    let queries = (proj.size * proj.size) as f64 * cfg.spp as f64;
    let mut rows = Vec::new();
    let mut image = None;
    for name in names {
        let f = ExperimentConfig::volume_filter(name)?;
        let (reference, _) = proj.render(f, false, cfg.ref_spp, cfg.seed ^ REFERENCE_SALT);
        let (det, det_fetches) = proj.render(f, false, cfg.spp, cfg.seed);
        let (stoch, stoch_fetches) = proj.render(f, true, cfg.spp, cfg.seed);
        check_finite("volume projection", reference.iter().chain(&det).chain(&stoch))?;
        let (det_mse, stoch_mse) = (mse(&det, &reference), mse(&stoch, &reference));
        rows.push(VolumeRow {
            filter: name.label().to_string(),
            det_fetches_per_query: det_fetches as f64 / queries,
            stoch_fetches_per_query: stoch_fetches as f64 / queries,
            fetch_ratio: det_fetches as f64 / stoch_fetches as f64,
            det_mse,
            stoch_mse,
            mse_ratio: if stoch_mse == det_mse { 1.0 } else { stoch_mse / det_mse },
            spp: cfg.spp,
            ref_spp: cfg.ref_spp,
            size: cfg.size,
        });
        if image.is_none() {
            let data = if cfg.estimator == Estimator::Det { det } else { stoch };
            image = Some(
                TextureGrid::new_2d(
                    proj.size,
                    proj.size,
                    v.channels(),
                    data.into_iter().map(|x| x as f32).collect(),
                )
                .map_err(|_| CliError::Numeric("projection value overflows f32".into()))?,
            );
        }
    }
    Ok(VolumeOutput {
        rows,
        image: image.expect("at least one filter"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_points_cover_the_volume() {
        let v = TextureGrid::new_3d([4, 6, 8], 1, vec![0.0; 192]).unwrap();
        let proj = Projection { volume: &v, size: 2 };
        assert_eq!(proj.point(0, [0.0; 3]), [-0.5, -0.5, -0.5]);
        assert_eq!(proj.point(3, [1.0; 3]), [3.5, 5.5, 7.5]);
    }

    #[test]
    fn constant_volume_has_no_error() {
        let v = TextureGrid::new_3d([5, 5, 5], 1, vec![0.3; 125]).unwrap();
        let proj = Projection { volume: &v, size: 3 };
        let (det, fetches) = proj.render(VolumeFilter::TricubicBSpline, false, 4, 1);
        let (stoch, stoch_fetches) = proj.render(VolumeFilter::TricubicBSpline, true, 4, 1);
        assert_eq!((fetches, stoch_fetches), (9 * 4 * 64, 9 * 4));
        for (a, b) in det.iter().zip(&stoch) {
            assert!((a - 0.3).abs() < 1e-6 && (b - 0.3).abs() < 1e-6);
        }
    }
}
