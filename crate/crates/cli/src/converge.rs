use rayon::prelude::*;
use serde::Serialize;
use stochtex::stats::{loglog_slope, RunningStats};
use stochtex::{FetchCounter, Filter, FilterQuery2D, RngStream, StochFilter, TexelSource, TextureGrid, VolumeFilter};

use crate::common::{check_finite, needs_pyramid, pyramid, Input};
use crate::config::{Estimator, ExperimentConfig, FilterName};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeRow {
    pub estimator: String,
    pub n: u64,
    /// Mean over queries of `|mean of n samples - reference|`.
    pub abs_error: f64,
    /// Mean over queries of the sample variance of the n samples.
    pub variance: f64,
    /// Log-log slope of `abs_error` against `n` for this estimator; 0 when
    /// the error is identically zero.
    pub fit_slope: f64,
}

pub const IMAGE_FILTERS: [FilterName; 6] = [
    FilterName::Bilinear,
    FilterName::BicubicBspline,
    FilterName::BicubicKeys,
    FilterName::Gaussian,
    FilterName::Ewa,
    FilterName::TrilinearMip,
];
pub const VOLUME_FILTERS: [FilterName; 2] = [FilterName::Trilinear, FilterName::TricubicBspline];

/// Sample counts 1, 4, 16, ... up to `max`.
pub fn sample_counts(max: u32) -> Vec<u64> {
    std::iter::successors(Some(1u64), |n| Some(n * 4))
        .take_while(|&n| n <= max as u64)
        .collect()
}

/// Deterministic query positions kept one texel inside the borders.
fn query_points<const D: usize>(dims: [usize; D], count: usize, seed: u64) -> Vec<[f64; D]> {
    let mut rng = RngStream::for_sample(seed, u64::MAX, 0);
    (0..count)
        .map(|_| std::array::from_fn(|k| 1.0 + rng.uniform() * (dims[k] as f64 - 3.0).max(0.0)))
        .collect()
}

/// Per-checkpoint error and variance for one query.
fn checkpoints(
    reference: f64,
    counts: &[u64],
    mut sample: impl FnMut(u64) -> Result<f64, CliError>,
) -> Result<Vec<(f64, f64)>, CliError> {
    let mut stats = RunningStats::new();
    let mut out = Vec::with_capacity(counts.len());
    let mut next = 0;
    for i in 0..*counts.last().unwrap_or(&0) {
        stats.push(sample(i)?);
        if stats.count() == counts[next] {
            out.push(((stats.mean() - reference).abs(), stats.variance()));
            next += 1;
        }
    }
    Ok(out)
}

fn rows_for(label: String, counts: &[u64], per_query: &[Vec<(f64, f64)>]) -> Vec<ConvergeRow> {
    let q = per_query.len() as f64;
    let errors: Vec<f64> = (0..counts.len())
        .map(|k| per_query.iter().map(|c| c[k].0).sum::<f64>() / q)
        .collect();
    let variances: Vec<f64> = (0..counts.len())
        .map(|k| per_query.iter().map(|c| c[k].1).sum::<f64>() / q)
        .collect();
    let slope = if counts.len() >= 2 && errors.iter().all(|&e| e > 0.0) {
        let ns: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
        loglog_slope(&ns, &errors)
    } else {
        0.0
    };
    counts
        .iter()
        .zip(errors.iter().zip(&variances))
        .map(|(&n, (&abs_error, &variance))| ConvergeRow {
            estimator: label.clone(),
            n,
            abs_error,
            variance,
            fit_slope: slope,
        })
        .collect()
}

pub fn converge(cfg: &ExperimentConfig, input: &Input) -> Result<Vec<ConvergeRow>, CliError> {
    let counts = sample_counts(cfg.spp);
    let queries = (cfg.grid as usize).pow(2);
    let mut rows = Vec::new();
    match input {
        Input::Image(g) => {
            let names: Vec<FilterName> = cfg.filter.map(|f| vec![f]).unwrap_or_else(|| IMAGE_FILTERS.to_vec());
            let pyr = pyramid(g);
            for name in names {
                let (det, stoch) = cfg.estimator_2d(name)?;
                let points = query_points([g.width(), g.height()], queries, cfg.seed);
                let d = 1.0 / cfg.scale;
                let qs: Vec<FilterQuery2D> = points
                    .iter()
                    .map(|p| FilterQuery2D::at(p[0], p[1]).with_derivatives([d, 0.0], [0.0, d]))
                    .collect();
                let run = |stoch: Option<StochFilter>| -> Result<Vec<Vec<(f64, f64)>>, CliError> {
                    if needs_pyramid(&det) {
                        image_queries(&pyr, &qs, det, stoch, &counts, cfg.seed)
                    } else {
                        image_queries(g, &qs, det, stoch, &counts, cfg.seed)
                    }
                };
                rows.extend(rows_for(format!("det-{}", name.label()), &counts, &run(None)?));
                if let Some(s) = stoch {
                    let label = format!("{}-{}", cfg.estimator.label(), name.label());
                    rows.extend(rows_for(label, &counts, &run(Some(s))?));
                }
            }
        }
        Input::Volume(v) => {
            let names: Vec<FilterName> = cfg.filter.map(|f| vec![f]).unwrap_or_else(|| VOLUME_FILTERS.to_vec());
            if cfg.estimator == Estimator::Fis {
                return Err(CliError::Usage("volume filters have no FIS estimator".into()));
            }
            for name in names {
                let f = ExperimentConfig::volume_filter(name)?;
                let points = query_points([v.width(), v.height(), v.depth()], queries, cfg.seed);
                rows.extend(rows_for(
                    format!("det-{}", name.label()),
                    &counts,
                    &volume_queries(v, &points, f, false, &counts, cfg.seed)?,
                ));
                if cfg.estimator == Estimator::Stoch {
                    rows.extend(rows_for(
                        format!("stoch-{}", name.label()),
                        &counts,
                        &volume_queries(v, &points, f, true, &counts, cfg.seed)?,
                    ));
                }
            }
        }
    }
    check_finite(
        "convergence table",
        rows.iter().flat_map(|r| [&r.abs_error, &r.variance, &r.fit_slope]),
    )?;
    Ok(rows)
}

fn image_queries<S: TexelSource + Sync>(
    src: &S,
    qs: &[FilterQuery2D],
    det: Filter,
    stoch: Option<StochFilter>,
    counts: &[u64],
    seed: u64,
) -> Result<Vec<Vec<(f64, f64)>>, CliError> {
    qs.par_iter()
        .enumerate()
        .map(|(index, q)| {
            let reference = det.apply(src, q, &mut FetchCounter::new())?.mean();
            checkpoints(reference, counts, |i| {
                Ok(match stoch {
                    None => reference,
                    Some(s) => {
                        let mut rng = RngStream::for_sample(seed, index as u64, i);
                        s.estimate(src, q, &mut rng, &mut FetchCounter::new())?.value.mean()
                    }
                })
            })
        })
        .collect()
}

fn volume_queries(
    v: &TextureGrid,
    points: &[[f64; 3]],
    f: VolumeFilter,
    stochastic: bool,
    counts: &[u64],
    seed: u64,
) -> Result<Vec<Vec<(f64, f64)>>, CliError> {
    points
        .par_iter()
        .enumerate()
        .map(|(index, &p)| {
            let reference = f.apply(v, p, &mut FetchCounter::new()).mean();
            checkpoints(reference, counts, |i| {
                Ok(if stochastic {
                    let xi = RngStream::for_sample(seed, index as u64, i).uniform();
                    f.estimate(v, p, xi, &mut FetchCounter::new()).value.mean()
                } else {
                    reference
                })
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_are_powers_of_four() {
        assert_eq!(sample_counts(1), [1]);
        assert_eq!(sample_counts(100), [1, 4, 16, 64]);
        assert_eq!(sample_counts(4096).last(), Some(&4096));
    }

    #[test]
    fn slope_of_exact_decay() {
        let counts = [1, 4, 16, 64];
        let per_query: Vec<Vec<(f64, f64)>> = vec![counts.iter().map(|&n| (1.0 / (n as f64).sqrt(), 1.0)).collect()];
        let rows = rows_for("x".into(), &counts, &per_query);
        assert!((rows[0].fit_slope + 0.5).abs() < 1e-12);
        let zero = rows_for("det".into(), &counts, &[vec![(0.0, 0.0); 4]]);
        assert!(zero.iter().all(|r| r.fit_slope == 0.0));
    }
}
