use serde::Serialize;
use stochtex::dct::{compress_dct, filter_over_dct, psnr_srgb8, stoch_filter_over_dct};
use stochtex::{DctBlockTexture, FilterQuery2D, RngStream, StochFilter, TextureGrid};

use crate::config::{Estimator, ExperimentConfig, FilterName};
use crate::error::CliError;

pub const DCT_FILTERS: [FilterName; 3] = [
    FilterName::Bilinear,
    FilterName::BicubicBspline,
    FilterName::BicubicKeys,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DctRow {
    pub filter: String,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub payload_bytes: usize,
    pub sidecar_bytes: usize,
    pub compression_ratio: f64,
    /// 8-bit sRGB PSNR of the decompressed image; `inf` when lossless.
    pub psnr_db: f64,
    pub det_decodes_per_lookup: f64,
    pub stoch_decodes_per_lookup: f64,
    pub decode_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct DctOutput {
    pub compressed: DctBlockTexture,
    pub rows: Vec<DctRow>,
}

/// Queries on a `grid x grid` lattice strictly inside the image, offset so
/// none of them lands on a texel centre.
fn lookup_queries(w: usize, h: usize, grid: usize) -> Vec<FilterQuery2D> {
    let at = |i: usize, n: usize| (i as f64 + 0.37) * (n as f64 - 1.0) / grid as f64;
    (0..grid * grid)
        .map(|i| FilterQuery2D::at(at(i % grid, w), at(i / grid, h)))
        .collect()
}

pub fn dct(cfg: &ExperimentConfig, src: &TextureGrid) -> Result<DctOutput, CliError> {
    if cfg.estimator == Estimator::Fis {
        return Err(CliError::Usage(
            "the dct command compares det and stoch estimators only".into(),
        ));
    }
    let compressed = compress_dct(src)?;
    let psnr_db = psnr_srgb8(src, &compressed.decompress())?;
    let queries = lookup_queries(src.width(), src.height(), cfg.grid as usize);
    let names: Vec<FilterName> = cfg.filter.map(|f| vec![f]).unwrap_or_else(|| DCT_FILTERS.to_vec());
    let mut rows = Vec::new();
    for name in names {
        let det = cfg.filter_2d(name)?;
        let stoch = StochFilter::from(det);
        let (mut det_decodes, mut stoch_decodes) = (0u64, 0u64);
        for (index, q) in queries.iter().enumerate() {
            det_decodes += filter_over_dct(&compressed, q, &det)?.1.decode_count;
            for i in 0..cfg.spp as u64 {
                let mut rng = RngStream::for_sample(cfg.seed, index as u64, i);
                stoch_decodes += stoch_filter_over_dct(&compressed, q, &stoch, &mut rng)?.1.decode_count;
            }
        }
        let det_per = det_decodes as f64 / queries.len() as f64;
        let stoch_per = stoch_decodes as f64 / (queries.len() as f64 * cfg.spp as f64);
        rows.push(DctRow {
            filter: name.label().to_string(),
            width: src.width(),
            height: src.height(),
            channels: src.channels(),
            payload_bytes: compressed.payload_bytes(),
            sidecar_bytes: compressed.sidecar_bytes(),
            compression_ratio: compressed.compression_ratio(),
            psnr_db,
            det_decodes_per_lookup: det_per,
            stoch_decodes_per_lookup: stoch_per,
            decode_ratio: det_per / stoch_per,
        });
    }
    Ok(DctOutput { compressed, rows })
}
