use rayon::prelude::*;
use stochtex::shading::{order_row, OrderRow};
use stochtex::{Filter, FilterQuery2D, TexelSource, TextureGrid};

use crate::common::{check_finite, needs_pyramid, pyramid, Input};
use crate::config::{ExperimentConfig, FilterName};
use crate::error::CliError;

pub const DEFAULT_FILTER: FilterName = FilterName::Bilinear;

/// Queries at the pixel centres of a `grid x grid` downsampled raster, so
/// they sit halfway between texels whenever the size divides evenly.
pub fn order_queries(w: usize, h: usize, grid: usize) -> Vec<FilterQuery2D> {
    let (dx, dy) = (w as f64 / grid as f64, h as f64 / grid as f64);
    (0..grid * grid)
        .map(|i| {
            let (x, y) = (i % grid, i / grid);
            FilterQuery2D::at((x as f64 + 0.5) * dx - 0.5, (y as f64 + 0.5) * dy - 0.5)
                .with_derivatives([dx, 0.0], [0.0, dy])
        })
        .collect()
}

/// Middle depth slice of a volume as an image.
fn middle_slice(v: &TextureGrid) -> Result<TextureGrid, CliError> {
    let z = v.depth() / 2;
    let ch = v.channels();
    Ok(TextureGrid::from_fn_2d(v.width(), v.height(), ch, |x, y, c| {
        v.texel(x, y, z).as_slice()[c] as f32
    })?)
}

pub fn order(cfg: &ExperimentConfig, input: &Input) -> Result<Vec<OrderRow>, CliError> {
    let image = match input {
        Input::Image(g) => g.clone(),
        Input::Volume(v) => middle_slice(v)?,
    };
    let (filter, _) = cfg.estimator_2d(cfg.filter.unwrap_or(DEFAULT_FILTER))?;
    let queries = order_queries(image.width(), image.height(), cfg.grid as usize);
    let rows = if needs_pyramid(&filter) {
        rows(cfg, &pyramid(&image), &filter, &queries)?
    } else {
        rows(cfg, &image, &filter, &queries)?
    };
    check_finite(
        "order report",
        rows.iter().flat_map(|r| {
            [
                &r.before,
                &r.after_ref,
                &r.after_stoch_mean,
                &r.after_stoch_sem,
                &r.abs_diff,
            ]
        }),
    )?;
    Ok(rows)
}

fn rows<S: TexelSource + Sync>(
    cfg: &ExperimentConfig,
    src: &S,
    filter: &Filter,
    queries: &[FilterQuery2D],
) -> Result<Vec<OrderRow>, CliError> {
    Ok(queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| order_row(src, &cfg.map, filter, q, cfg.spp as u64, cfg.seed, i as u64))
        .collect::<Result<Vec<_>, _>>()?)
}
