//! DCT block-compressed textures with per-texel decode.
//!
//! Each 8x8 block and channel keeps its six lowest-frequency DCT-II
//! coefficients in zigzag order. The DC term is quantized to 7 bits and the
//! five AC terms to 5 bits each, packed into one little-endian `u32`. Two
//! `f32` scales per block and channel map the integers back to
//! coefficients. A texel is decoded by evaluating the six basis functions at
//! its position in the block, so a filter pays one decode per tap.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

use crate::filters::{Filter, FilterQuery2D};
use crate::stochastic::{RngStream, StochFilter};
use crate::texture::{linear_to_srgb, AddressMode, ColorSpace, FetchCounter, Texel, TexelSource, TextureGrid};
use crate::{Error, Result};

pub const BLOCK: usize = 8;
pub const KEPT: usize = 6;
/// `(u, v)` frequency pairs, `u` along x and `v` along y, in zigzag order.
pub const ZIGZAG: [(usize, usize); KEPT] = [(0, 0), (1, 0), (0, 1), (0, 2), (1, 1), (2, 0)];
pub const DC_BITS: u32 = 7;
pub const AC_BITS: u32 = 5;
const DC_MAX: i32 = (1 << (DC_BITS - 1)) - 1;
const AC_MAX: i32 = (1 << (AC_BITS - 1)) - 1;

pub const DCT_MAGIC: &[u8; 4] = b"STXD";
pub const DCT_VERSION: u32 = 1;

/// `basis()[x][u]`: orthonormal 8-point DCT-II basis for frequencies 0..3.
fn basis() -> &'static [[f64; 3]; BLOCK] {
    static TABLE: OnceLock<[[f64; 3]; BLOCK]> = OnceLock::new();
    TABLE.get_or_init(|| {
        std::array::from_fn(|x| {
            std::array::from_fn(|u| {
                let c = if u == 0 {
                    (1.0 / BLOCK as f64).sqrt()
                } else {
                    (2.0 / BLOCK as f64).sqrt()
                };
                c * ((2 * x + 1) as f64 * u as f64 * PI / (2 * BLOCK) as f64).cos()
            })
        })
    })
}

/// Value of kept basis function `k` at intra-block position `(x, y)`.
#[inline]
pub fn basis_value(k: usize, x: usize, y: usize) -> f64 {
    let (u, v) = ZIGZAG[k];
    let b = basis();
    b[x][u] * b[y][v]
}

/// Quantized coefficients of one block and channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRecord {
    pub dc_scale: f32,
    pub ac_scale: f32,
    pub packed: u32,
}

impl BlockRecord {
    fn quantize(coefs: &[f64; KEPT]) -> Self {
        let dc_scale = (coefs[0].abs() / DC_MAX as f64) as f32;
        let mut ac_max = coefs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        // rounding residue on flat blocks would otherwise claim all 5 bits
        if ac_max <= 1e-9 * coefs[0].abs() {
            ac_max = 0.0;
        }
        let ac_scale = (ac_max / AC_MAX as f64) as f32;
        let q = |c: f64, scale: f32, max: i32| -> u32 {
            if scale == 0.0 {
                return max as u32;
            }
            ((c / scale as f64).round() as i32).clamp(-max, max).wrapping_add(max) as u32
        };
        let mut packed = q(coefs[0], dc_scale, DC_MAX);
        for (k, &c) in coefs[1..].iter().enumerate() {
            packed |= q(c, ac_scale, AC_MAX) << (DC_BITS + AC_BITS * k as u32);
        }
        BlockRecord {
            dc_scale,
            ac_scale,
            packed,
        }
    }

    /// Signed integer levels, DC first.
    pub fn levels(&self) -> [i32; KEPT] {
        let mut out = [0; KEPT];
        out[0] = (self.packed & ((1 << DC_BITS) - 1)) as i32 - DC_MAX;
        for (k, level) in out[1..].iter_mut().enumerate() {
            let field = (self.packed >> (DC_BITS + AC_BITS * k as u32)) & ((1 << AC_BITS) - 1);
            *level = field as i32 - AC_MAX;
        }
        out
    }

    pub fn coefficients(&self) -> [f64; KEPT] {
        let l = self.levels();
        std::array::from_fn(|k| {
            let scale = if k == 0 { self.dc_scale } else { self.ac_scale };
            l[k] as f64 * scale as f64
        })
    }

    /// Half the quantization step of coefficient `k`.
    pub fn half_step(&self, k: usize) -> f64 {
        0.5 * if k == 0 { self.dc_scale } else { self.ac_scale } as f64
    }
}

/// A 2D texture stored as quantized DCT blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DctBlockTexture {
    width: usize,
    height: usize,
    channels: usize,
    records: Vec<BlockRecord>,
    address_mode: AddressMode,
}

/// Forward DCT of the kept coefficients for a block.
fn forward(block: &[f64; BLOCK * BLOCK]) -> [f64; KEPT] {
    std::array::from_fn(|k| {
        let mut acc = 0.0;
        for y in 0..BLOCK {
            for x in 0..BLOCK {
                acc += block[y * BLOCK + x] * basis_value(k, x, y);
            }
        }
        acc
    })
}

/// Compresses a 2D texture; edge blocks are clamp-padded.
pub fn compress_dct(tex: &TextureGrid) -> Result<DctBlockTexture> {
    if tex.ndim() != 2 {
        return Err(Error::param("DCT compression needs a 2D texture"));
    }
    let (w, h, ch) = (tex.width(), tex.height(), tex.channels());
    let (bx, by) = (w.div_ceil(BLOCK), h.div_ceil(BLOCK));
    let mut records = Vec::with_capacity(bx * by * ch);
    let mut block = [0.0f64; BLOCK * BLOCK];
    for j in 0..by {
        for i in 0..bx {
            for c in 0..ch {
                for y in 0..BLOCK {
                    for x in 0..BLOCK {
                        let sx = (i * BLOCK + x).min(w - 1);
                        let sy = (j * BLOCK + y).min(h - 1);
                        block[y * BLOCK + x] = tex.data()[(sy * w + sx) * ch + c] as f64;
                    }
                }
                records.push(BlockRecord::quantize(&forward(&block)));
            }
        }
    }
    Ok(DctBlockTexture {
        width: w,
        height: h,
        channels: ch,
        records,
        address_mode: tex.address_mode(),
    })
}

impl DctBlockTexture {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn blocks(&self) -> (usize, usize) {
        (self.width.div_ceil(BLOCK), self.height.div_ceil(BLOCK))
    }

    pub fn records(&self) -> &[BlockRecord] {
        &self.records
    }

    pub fn with_address_mode(mut self, mode: AddressMode) -> Self {
        self.address_mode = mode;
        self
    }

    pub fn record(&self, block_x: usize, block_y: usize, channel: usize) -> &BlockRecord {
        let (bx, _) = self.blocks();
        &self.records[(block_y * bx + block_x) * self.channels + channel]
    }

    /// Bytes of packed coefficients, excluding scales.
    pub fn payload_bytes(&self) -> usize {
        self.records.len() * 4
    }

    /// Bytes of per-block scale factors.
    pub fn sidecar_bytes(&self) -> usize {
        self.records.len() * 8
    }

    /// Size of the 8-bit source over the coefficient payload.
    pub fn compression_ratio(&self) -> f64 {
        (self.width * self.height * self.channels) as f64 / self.payload_bytes() as f64
    }

    /// Decodes one in-range texel without counting it.
    pub fn decode_raw(&self, x: usize, y: usize) -> Texel {
        let mut out = Texel::zero(self.channels);
        let (lx, ly) = (x % BLOCK, y % BLOCK);
        for c in 0..self.channels {
            let coefs = self.record(x / BLOCK, y / BLOCK, c).coefficients();
            out.as_mut_slice()[c] = (0..KEPT).map(|k| coefs[k] * basis_value(k, lx, ly)).sum();
        }
        out
    }

    /// Decodes the texel at an integer coordinate, remapped by the address
    /// mode. Counts one fetch and one decode.
    pub fn decode_texel(&self, coord: [i64; 2], counter: &mut FetchCounter) -> Texel {
        counter.count += 1;
        counter.decode_count += 1;
        let x = self.address_mode.remap(coord[0], self.width);
        let y = self.address_mode.remap(coord[1], self.height);
        self.decode_raw(x, y)
    }

    /// Full decode into a linear texture grid.
    pub fn decompress(&self) -> TextureGrid {
        TextureGrid::from_fn_2d(self.width, self.height, self.channels, |x, y, c| {
            self.decode_raw(x, y).as_slice()[c] as f32
        })
        .expect("decoded values are finite")
        .with_address_mode(self.address_mode)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.records.len() * 12);
        out.extend_from_slice(DCT_MAGIC);
        for v in [DCT_VERSION, self.width as u32, self.height as u32, self.channels as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for r in &self.records {
            out.extend_from_slice(&r.dc_scale.to_le_bytes());
            out.extend_from_slice(&r.ac_scale.to_le_bytes());
            out.extend_from_slice(&r.packed.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != DCT_MAGIC {
            return Err(Error::format(0, "missing STXD magic"));
        }
        let word = |offset: usize| -> Result<[u8; 4]> {
            bytes
                .get(offset..offset + 4)
                .map(|b| b.try_into().unwrap())
                .ok_or_else(|| Error::format(bytes.len() as u64, "truncated DCT file"))
        };
        let version = u32::from_le_bytes(word(4)?);
        if version != DCT_VERSION {
            return Err(Error::format(4, format!("unsupported DCT version {version}")));
        }
        let width = u32::from_le_bytes(word(8)?) as usize;
        let height = u32::from_le_bytes(word(12)?) as usize;
        let channels = u32::from_le_bytes(word(16)?) as usize;
        if width == 0 || height == 0 {
            return Err(Error::format(8, "zero DCT texture dimension"));
        }
        if !(1..=4).contains(&channels) {
            return Err(Error::format(16, format!("unsupported channel count {channels}")));
        }
        let count = width
            .div_ceil(BLOCK)
            .checked_mul(height.div_ceil(BLOCK))
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::format(8, "DCT dimensions overflow"))?;
        let expected = count.checked_mul(12).and_then(|n| n.checked_add(20));
        match expected {
            Some(n) if n == bytes.len() => {}
            Some(n) if n > bytes.len() => return Err(Error::format(bytes.len() as u64, "truncated DCT file")),
            Some(n) => return Err(Error::format(n as u64, "trailing bytes after DCT payload")),
            None => return Err(Error::format(8, "DCT dimensions overflow")),
        }
        let mut records = Vec::with_capacity(count);
        for i in 0..count {
            let o = 20 + 12 * i;
            let record = BlockRecord {
                dc_scale: f32::from_le_bytes(word(o)?),
                ac_scale: f32::from_le_bytes(word(o + 4)?),
                packed: u32::from_le_bytes(word(o + 8)?),
            };
            if !record.dc_scale.is_finite() || !record.ac_scale.is_finite() {
                return Err(Error::format(o as u64, "non-finite DCT scale"));
            }
            records.push(record);
        }
        Ok(DctBlockTexture {
            width,
            height,
            channels,
            records,
            address_mode: AddressMode::Clamp,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

impl TexelSource for DctBlockTexture {
    fn dims(&self) -> [usize; 3] {
        [self.width, self.height, 1]
    }

    fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    fn fetch(&self, level: usize, coord: [i64; 3], counter: &mut FetchCounter) -> Texel {
        debug_assert_eq!(level, 0);
        self.decode_texel([coord[0], coord[1]], counter)
    }
}

/// Deterministic filter over the compressed texture; the counter records
/// one decode per tap.
pub fn filter_over_dct(dct: &DctBlockTexture, q: &FilterQuery2D, filter: &Filter) -> Result<(Texel, FetchCounter)> {
    let mut counter = FetchCounter::new();
    let v = filter.apply(dct, q, &mut counter)?;
    Ok((v, counter))
}

/// One stochastic estimate over the compressed texture.
pub fn stoch_filter_over_dct(
    dct: &DctBlockTexture,
    q: &FilterQuery2D,
    filter: &StochFilter,
    rng: &mut RngStream,
) -> Result<(Texel, FetchCounter)> {
    let mut counter = FetchCounter::new();
    let est = filter.estimate(dct, q, rng, &mut counter)?;
    Ok((est.value, counter))
}

/// PSNR in dB between two images after conversion to 8-bit sRGB, averaged
/// over all channels. Identical 8-bit images give infinity.
pub fn psnr_srgb8(reference: &TextureGrid, test: &TextureGrid) -> Result<f64> {
    if reference.width() != test.width()
        || reference.height() != test.height()
        || reference.depth() != test.depth()
        || reference.channels() != test.channels()
    {
        return Err(Error::param("PSNR needs images of equal shape"));
    }
    let to8 = |g: &TextureGrid, v: f32| -> f64 {
        let encoded = match g.color_space() {
            ColorSpace::Linear => linear_to_srgb(v as f64),
            ColorSpace::SrgbEncoded => (v as f64).clamp(0.0, 1.0),
        };
        (encoded * 255.0).round()
    };
    let n = reference.data().len() as f64;
    let mse: f64 = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(&a, &b)| {
            let d = to8(reference, a) - to8(test, b);
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::stats::RunningStats;
    use crate::testutil::{noise, random_grid};

    /// Independent kept-coefficient DCT: direct double sum with the textbook
    /// normalization.
    fn oracle_coef(block: &[f64], u: usize, v: usize) -> f64 {
        let c = |k: usize| if k == 0 { (0.125f64).sqrt() } else { 0.5 };
        let mut acc = 0.0;
        for y in 0..8 {
            for x in 0..8 {
                acc += block[y * 8 + x]
                    * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos()
                    * ((2 * y + 1) as f64 * v as f64 * PI / 16.0).cos();
            }
        }
        c(u) * c(v) * acc
    }

    fn block_texture(f: impl Fn(usize, usize) -> f64) -> TextureGrid {
        TextureGrid::from_fn_2d(8, 8, 1, |x, y, _| f(x, y) as f32).unwrap()
    }

    #[test]
    fn forward_matches_oracle() {
        let block: Vec<f64> = (0..64).map(|i| noise(i, 3)).collect();
        let coefs = forward(block.as_slice().try_into().unwrap());
        for (k, &(u, v)) in ZIGZAG.iter().enumerate() {
            assert!((coefs[k] - oracle_coef(&block, u, v)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_block_is_dc_only() {
        let v = 0.37f32;
        let dct = compress_dct(&block_texture(|_, _| v as f64)).unwrap();
        let r = dct.records()[0];
        assert_eq!(&r.levels()[1..], &[0; 5]);
        let step = 2.0 * r.half_step(0);
        for y in 0..8 {
            for x in 0..8 {
                assert!((dct.decode_raw(x, y).x() - v as f64).abs() <= step);
                assert!((dct.decode_raw(x, y).x() - v as f64).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn lowest_cosine_is_captured() {
        let b = |x: usize, u: usize| ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos();
        let tex = block_texture(|x, y| 0.5 + 0.3 * b(x, 1) + 0.1 * b(y, 1));
        let dct = compress_dct(&tex).unwrap();
        let r = dct.records()[0];
        let bound: f64 = (0..KEPT).map(|k| r.half_step(k) * basis_value(k, 0, 0).abs()).sum();
        for y in 0..8 {
            for x in 0..8 {
                let expect = tex.texel(x, y, 0).x();
                assert!((dct.decode_raw(x, y).x() - expect).abs() <= bound + 1e-6);
            }
        }
    }

    #[test]
    fn quantization_error_bound_on_random_blocks() {
        for seed in 0..20 {
            let tex = random_grid(16, 16, 2, seed);
            let dct = compress_dct(&tex).unwrap();
            for by in 0..2 {
                for bx in 0..2 {
                    for c in 0..2 {
                        let block: Vec<f64> = (0..64)
                            .map(|i| tex.texel(bx * 8 + i % 8, by * 8 + i / 8, 0).as_slice()[c])
                            .collect();
                        let exact: Vec<f64> = ZIGZAG.iter().map(|&(u, v)| oracle_coef(&block, u, v)).collect();
                        let r = dct.record(bx, by, c);
                        for y in 0..8 {
                            for x in 0..8 {
                                let truncated: f64 = (0..KEPT).map(|k| exact[k] * basis_value(k, x, y)).sum();
                                let bound: f64 = (0..KEPT).map(|k| basis_value(k, x, y).abs() * r.half_step(k)).sum();
                                let got = dct.decode_raw(bx * 8 + x, by * 8 + y).as_slice()[c];
                                assert!((got - truncated).abs() <= bound * (1.0 + 1e-6) + 1e-9);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn compression_is_deterministic_and_round_trips() {
        let tex = random_grid(20, 13, 3, 9);
        let a = compress_dct(&tex).unwrap();
        let b = compress_dct(&tex).unwrap();
        assert_eq!(a.encode(), b.encode());
        let back = DctBlockTexture::decode(&a.encode()).unwrap();
        assert_eq!(back, a);
        assert_eq!(a.blocks(), (3, 2));
    }

    #[test]
    fn decode_rejects_bad_files() {
        let bytes = compress_dct(&random_grid(8, 8, 1, 1)).unwrap().encode();
        assert!(DctBlockTexture::decode(b"NOPE").is_err());
        match DctBlockTexture::decode(&bytes[..bytes.len() - 1]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, bytes.len() as u64 - 1),
            other => panic!("{other:?}"),
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(DctBlockTexture::decode(&extra).is_err());
        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(DctBlockTexture::decode(&bad_version).is_err());
        assert!(compress_dct(&crate::testutil::random_volume(4, 1)).is_err());
    }

    #[test]
    fn ratio_is_sixteen_on_multiples_of_eight() {
        let dct = compress_dct(&random_grid(64, 32, 3, 2)).unwrap();
        assert_eq!(dct.compression_ratio(), 16.0);
        assert_eq!(dct.payload_bytes(), 64 * 32 * 3 / 16);
        assert_eq!(dct.sidecar_bytes(), 2 * dct.payload_bytes());
    }

    #[test]
    fn decode_counts() {
        let dct = compress_dct(&random_grid(16, 16, 1, 4)).unwrap();
        let q = FilterQuery2D::at(5.3, 9.2);
        let (_, det) = filter_over_dct(&dct, &q, &Filter::Bilinear).unwrap();
        assert_eq!(det.decode_count, 4);
        let (_, det) = filter_over_dct(&dct, &q, &Filter::BicubicBSpline).unwrap();
        assert_eq!(det.decode_count, 16);
        let (_, st) = stoch_filter_over_dct(&dct, &q, &StochFilter::BicubicBSpline, &mut RngStream::new(1)).unwrap();
        assert_eq!(st.decode_count, 1);
        assert_eq!(st.count, 1);
    }

    #[test]
    fn stochastic_over_dct_is_unbiased() {
        let dct = compress_dct(&random_grid(16, 16, 1, 6)).unwrap();
        let decoded = dct.decompress();
        let q = FilterQuery2D::at(7.6, 4.2);
        let expect = Filter::BicubicBSpline
            .apply(&decoded, &q, &mut FetchCounter::new())
            .unwrap()
            .x();
        let mut stats = RunningStats::new();
        for i in 0..100_000 {
            let mut rng = RngStream::for_sample(2, 0, i);
            stats.push(
                stoch_filter_over_dct(&dct, &q, &StochFilter::BicubicBSpline, &mut rng)
                    .unwrap()
                    .0
                    .x(),
            );
        }
        assert!((stats.mean() - expect).abs() <= 4.0 * stats.sem());
    }

    #[test]
    fn out_of_range_coords_follow_address_mode() {
        let tex = random_grid(16, 8, 1, 7);
        let dct = compress_dct(&tex).unwrap();
        let mut c = FetchCounter::new();
        assert_eq!(dct.decode_texel([-3, 20], &mut c), dct.decode_raw(0, 7));
        let wrapped = dct.clone().with_address_mode(AddressMode::Wrap);
        assert_eq!(wrapped.decode_texel([-3, 9], &mut c), dct.decode_raw(13, 1));
    }

    #[test]
    fn psnr_of_constant_is_infinite() {
        let tex = TextureGrid::from_fn_2d(16, 16, 3, |_, _, c| 0.2 + 0.1 * c as f32).unwrap();
        let dct = compress_dct(&tex).unwrap();
        assert_eq!(psnr_srgb8(&tex, &dct.decompress()).unwrap(), f64::INFINITY);
        let noisy = random_grid(16, 16, 3, 1);
        let p = psnr_srgb8(&noisy, &compress_dct(&noisy).unwrap().decompress()).unwrap();
        assert!(p.is_finite() && p > 0.0);
    }

    proptest! {
        #[test]
        fn levels_stay_in_range(vals in proptest::collection::vec(-2.0f64..2.0, KEPT)) {
            let coefs: [f64; KEPT] = vals.as_slice().try_into().unwrap();
            let r = BlockRecord::quantize(&coefs);
            let l = r.levels();
            prop_assert!(l[0].abs() <= DC_MAX);
            prop_assert!(l[1..].iter().all(|x| x.abs() <= AC_MAX));
            let back = r.coefficients();
            for k in 0..KEPT {
                prop_assert!((back[k] - coefs[k]).abs() <= r.half_step(k) * (1.0 + 1e-6) + 1e-12);
            }
        }
    }
}
