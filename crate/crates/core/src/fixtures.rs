//! Deterministic procedural test assets.

use crate::texture::TextureGrid;

pub const PUFF_SIZE: usize = 64;
pub const HIGH_CONTRAST_SIZE: usize = 256;

const LOW: f32 = 0.1;
const HIGH: f32 = 1.0;

/// Soft cloud-like density on an `n^3` grid: a few overlapping Gaussian
/// lobes with a mild ripple, values in `[0, 1]`.
pub fn puff_volume(n: usize) -> TextureGrid {
    let lobes: [([f64; 3], f64, f64); 5] = [
        ([0.50, 0.45, 0.50], 0.22, 0.9),
        ([0.35, 0.55, 0.45], 0.14, 0.6),
        ([0.65, 0.60, 0.55], 0.12, 0.5),
        ([0.50, 0.30, 0.60], 0.10, 0.4),
        ([0.42, 0.66, 0.62], 0.08, 0.35),
    ];
    TextureGrid::from_fn_3d([n, n, n], 1, |x, y, z, _| {
        let p = [x, y, z].map(|i| (i as f64 + 0.5) / n as f64);
        let mut d = 0.0;
        for (c, r, a) in lobes {
            let r2 = (0..3).map(|k| (p[k] - c[k]).powi(2)).sum::<f64>();
            d += a * (-r2 / (2.0 * r * r)).exp();
        }
        let ripple = 1.0 + 0.15 * (17.0 * p[0]).sin() * (13.0 * p[1]).cos() * (11.0 * p[2]).sin();
        (d * ripple).clamp(0.0, 1.0) as f32
    })
    .expect("fixture dimensions are valid")
}

/// The 64^3 puff volume.
pub fn puff() -> TextureGrid {
    puff_volume(PUFF_SIZE)
}

/// `n x n` image: the left half is a one-texel checkerboard of 0.1 and 1.0,
/// the right half a horizontal ramp from 0.1 to 1.0.
pub fn high_contrast_image(n: usize) -> TextureGrid {
    let half = n / 2;
    TextureGrid::from_fn_2d(n, n, 1, |x, y, _| {
        if x < half {
            if (x + y) % 2 == 0 {
                LOW
            } else {
                HIGH
            }
        } else {
            let t = if n - half > 1 {
                (x - half) as f32 / (n - half - 1) as f32
            } else {
                0.0
            };
            LOW + (HIGH - LOW) * t
        }
    })
    .expect("fixture dimensions are valid")
}

/// The 256^2 high-contrast image.
pub fn high_contrast() -> TextureGrid {
    high_contrast_image(HIGH_CONTRAST_SIZE)
}
