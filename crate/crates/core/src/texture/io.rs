//! Image and volume files.
//!
//! Images are PNG (8 or 16 bit, 1-4 channels, sRGB encoded) or PFM
//! (little-endian portable float map, linear). Volumes use a small binary
//! container:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "STXV"
//! 4       4     u32 version = 1
//! 8       12    u32 dims[3] (x, y, z)
//! 20      4     u32 channels
//! 24      ...   f32 payload, x fastest, channels interleaved
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{ColorType, DynamicImage};

use super::{ColorSpace, TextureGrid};
use crate::{Error, Result};

pub const VOLUME_MAGIC: &[u8; 4] = b"STXV";
pub const VOLUME_VERSION: u32 = 1;
const VOLUME_HEADER_LEN: usize = 24;

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default()
}

/// Loads a PNG or PFM image. PNG data is sRGB decoded to linear light unless
/// `raw` is set, in which case the grid keeps its encoded values and is
/// tagged [`ColorSpace::SrgbEncoded`].
pub fn load_image(path: impl AsRef<Path>, raw: bool) -> Result<TextureGrid> {
    let path = path.as_ref();
    if extension(path) == "pfm" {
        return read_pfm(&fs::read(path)?);
    }
    let img = image::ImageReader::open(path)?.with_guessed_format()?.decode()?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, data, encoded): (usize, Vec<f32>, bool) = match img {
        DynamicImage::ImageLuma8(b) => (1, scale_u8(b.as_raw()), true),
        DynamicImage::ImageLumaA8(b) => (2, scale_u8(b.as_raw()), true),
        DynamicImage::ImageRgb8(b) => (3, scale_u8(b.as_raw()), true),
        DynamicImage::ImageRgba8(b) => (4, scale_u8(b.as_raw()), true),
        DynamicImage::ImageLuma16(b) => (1, scale_u16(b.as_raw()), true),
        DynamicImage::ImageLumaA16(b) => (2, scale_u16(b.as_raw()), true),
        DynamicImage::ImageRgb16(b) => (3, scale_u16(b.as_raw()), true),
        DynamicImage::ImageRgba16(b) => (4, scale_u16(b.as_raw()), true),
        DynamicImage::ImageRgb32F(b) => (3, b.into_raw(), false),
        DynamicImage::ImageRgba32F(b) => (4, b.into_raw(), false),
        other => (4, other.into_rgba32f().into_raw(), false),
    };
    let mut tex = TextureGrid::new_2d(w, h, channels, data)?;
    if encoded {
        tex = tex.with_color_space(ColorSpace::SrgbEncoded);
        if !raw {
            tex = tex.to_linear();
        }
    }
    Ok(tex)
}

fn scale_u8(v: &[u8]) -> Vec<f32> {
    v.iter().map(|&x| x as f32 / 255.0).collect()
}

fn scale_u16(v: &[u16]) -> Vec<f32> {
    v.iter().map(|&x| x as f32 / 65535.0).collect()
}

/// Writes an image, choosing the format from the extension. PNG output is
/// 8-bit and sRGB encoded (linear grids are encoded on the way out); PFM
/// output stores the raw floats and supports 1 or 3 channels.
pub fn store_image(tex: &TextureGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if tex.ndim() != 2 {
        return Err(Error::param("only 2D grids can be stored as images"));
    }
    match extension(path).as_str() {
        "pfm" => Ok(fs::write(path, write_pfm(tex)?)?),
        "png" => store_png(tex, path, false),
        other => Err(Error::param(format!("unsupported image extension {other:?}"))),
    }
}

/// Writes a PNG with 8 or 16 bits per channel.
pub fn store_png(tex: &TextureGrid, path: impl AsRef<Path>, sixteen_bit: bool) -> Result<()> {
    let encoded = tex.clone().to_srgb();
    let (w, h) = (tex.width() as u32, tex.height() as u32);
    let quant = |v: f32, max: f32| (v.clamp(0.0, 1.0) * max).round();
    if sixteen_bit {
        let color = match tex.channels() {
            1 => ColorType::L16,
            2 => ColorType::La16,
            3 => ColorType::Rgb16,
            _ => ColorType::Rgba16,
        };
        let bytes: Vec<u8> = encoded
            .data()
            .iter()
            .flat_map(|&v| (quant(v, 65535.0) as u16).to_ne_bytes())
            .collect();
        image::save_buffer(path, &bytes, w, h, color)?;
    } else {
        let color = match tex.channels() {
            1 => ColorType::L8,
            2 => ColorType::La8,
            3 => ColorType::Rgb8,
            _ => ColorType::Rgba8,
        };
        let bytes: Vec<u8> = encoded.data().iter().map(|&v| quant(v, 255.0) as u8).collect();
        image::save_buffer(path, &bytes, w, h, color)?;
    }
    Ok(())
}

fn write_pfm(tex: &TextureGrid) -> Result<Vec<u8>> {
    let tag = match tex.channels() {
        1 => "Pf",
        3 => "PF",
        n => return Err(Error::param(format!("PFM stores 1 or 3 channels, not {n}"))),
    };
    let (w, h, ch) = (tex.width(), tex.height(), tex.channels());
    let mut out = format!("{tag}\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * ch * 4);
    // PFM rows run bottom to top.
    for row in tex.data().chunks_exact(w * ch).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn read_pfm(bytes: &[u8]) -> Result<TextureGrid> {
    let mut pos = 0usize;
    let mut token = |what: &str| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(start as u64, format!("missing PFM {what}")));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let channels = match token("tag")?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::format(0, format!("bad PFM tag {other:?}"))),
    };
    let parse_dim = |s: String| {
        s.parse::<usize>()
            .map_err(|_| Error::format(0, format!("bad PFM dimension {s:?}")))
    };
    let w = parse_dim(token("width")?)?;
    let h = parse_dim(token("height")?)?;
    let scale_text = token("scale")?;
    let scale: f32 = scale_text
        .parse()
        .map_err(|_| Error::format(0, format!("bad PFM scale {scale_text:?}")))?;
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let count = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format(0, "PFM dimensions overflow"))?;
    let needed = count
        .checked_mul(4)
        .and_then(|n| n.checked_add(start))
        .ok_or_else(|| Error::format(0, "PFM dimensions overflow"))?;
    if bytes.len() < needed {
        return Err(Error::format(
            bytes.len() as u64,
            format!("PFM payload truncated, expected {needed} bytes"),
        ));
    }
    let little = scale < 0.0;
    let floats: Vec<f32> = bytes[start..needed]
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    if let Some(i) = floats.iter().position(|v| !v.is_finite()) {
        return Err(Error::format((start + 4 * i) as u64, "non-finite PFM value"));
    }
    let data: Vec<f32> = floats.chunks_exact(w * channels).rev().flatten().copied().collect();
    TextureGrid::new_2d(w, h, channels, data)
}

/// Reads an STXV volume.
pub fn load_volume(path: impl AsRef<Path>) -> Result<TextureGrid> {
    decode_volume(&fs::read(path)?)
}

/// Writes an STXV volume.
pub fn store_volume(tex: &TextureGrid, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_volume(tex))?;
    Ok(())
}

pub(crate) fn encode_volume(tex: &TextureGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(VOLUME_HEADER_LEN + tex.data().len() * 4);
    out.extend_from_slice(VOLUME_MAGIC);
    out.extend_from_slice(&VOLUME_VERSION.to_le_bytes());
    for d in tex.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(tex.channels() as u32).to_le_bytes());
    for v in tex.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub(crate) fn decode_volume(bytes: &[u8]) -> Result<TextureGrid> {
    let u32_at = |offset: usize| -> Result<u32> {
        bytes
            .get(offset..offset + 4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::format(bytes.len() as u64, "volume header truncated"))
    };
    if bytes.len() < 4 || &bytes[..4] != VOLUME_MAGIC {
        return Err(Error::format(0, "missing STXV magic"));
    }
    let version = u32_at(4)?;
    if version != VOLUME_VERSION {
        return Err(Error::format(4, format!("unsupported volume version {version}")));
    }
    let dims = [u32_at(8)? as usize, u32_at(12)? as usize, u32_at(16)? as usize];
    let channels = u32_at(20)? as usize;
    if dims.contains(&0) {
        return Err(Error::format(8, format!("zero volume dimension in {dims:?}")));
    }
    if !(1..=super::MAX_CHANNELS).contains(&channels) {
        return Err(Error::format(20, format!("unsupported channel count {channels}")));
    }
    let count = dims
        .iter()
        .try_fold(channels, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(4).map(|_| n))
        .ok_or_else(|| Error::format(8, "volume dimensions overflow"))?;
    let payload = &bytes[VOLUME_HEADER_LEN..];
    if payload.len() < count * 4 {
        return Err(Error::format(
            bytes.len() as u64,
            format!(
                "volume payload truncated, expected {} bytes",
                VOLUME_HEADER_LEN + count * 4
            ),
        ));
    }
    if payload.len() > count * 4 {
        return Err(Error::format(
            (VOLUME_HEADER_LEN + count * 4) as u64,
            "trailing bytes after volume payload",
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    TextureGrid::new_3d(dims, channels, data).map_err(|e| Error::format(VOLUME_HEADER_LEN as u64, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(i: usize) -> f32 {
        let x = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 40;
        x as f32 / (1u64 << 24) as f32
    }

    #[test]
    fn pfm_round_trip_is_bitwise() {
        let tex = TextureGrid::from_fn_2d(16, 16, 3, |x, y, c| noise(x + 16 * y + 256 * c) * 7.0 - 2.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pfm");
        store_image(&tex, &path).unwrap();
        let back = load_image(&path, false).unwrap();
        assert_eq!(back.data(), tex.data());
    }

    #[test]
    fn pfm_big_endian_read() {
        let mut bytes = b"Pf\n2 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&1.5f32.to_be_bytes());
        bytes.extend_from_slice(&(-2.0f32).to_be_bytes());
        let tex = read_pfm(&bytes).unwrap();
        assert_eq!(tex.data(), &[1.5, -2.0]);
    }

    #[test]
    fn pfm_truncated() {
        let mut bytes = b"PF\n2 2\n-1.0\n".to_vec();
        bytes.extend_from_slice(&[0u8; 20]);
        match read_pfm(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, bytes.len() as u64),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn png_gray_128_decodes_to_linear() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        image::save_buffer(&path, &[128u8; 4], 2, 2, ColorType::L8).unwrap();
        let tex = load_image(&path, false).unwrap();
        assert_eq!(tex.color_space(), ColorSpace::Linear);
        assert!((tex.data()[0] as f64 - 0.215_860_5).abs() < 1e-6);
        let raw = load_image(&path, true).unwrap();
        assert_eq!(raw.color_space(), ColorSpace::SrgbEncoded);
        assert_eq!(raw.data()[0], 128.0 / 255.0);
    }

    #[test]
    fn png_round_trip_8_and_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let tex = TextureGrid::from_fn_2d(5, 3, 4, |x, y, c| ((x * 37 + y * 11 + c * 5) % 256) as f32 / 255.0)
            .unwrap()
            .with_color_space(ColorSpace::SrgbEncoded);
        let p8 = dir.path().join("a.png");
        store_png(&tex, &p8, false).unwrap();
        assert_eq!(load_image(&p8, true).unwrap().data(), tex.data());
        let p16 = dir.path().join("b.png");
        store_png(&tex, &p16, true).unwrap();
        let back = load_image(&p16, true).unwrap();
        assert_eq!(back.channels(), 4);
        for (a, b) in back.data().iter().zip(tex.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn volume_round_trip() {
        let vol = TextureGrid::from_fn_3d([8, 8, 8], 1, |x, y, z, _| noise(x + 8 * y + 64 * z)).unwrap();
        let bytes = encode_volume(&vol);
        assert_eq!(bytes.len(), 24 + 512 * 4);
        assert_eq!(&bytes[..4], b"STXV");
        let back = decode_volume(&bytes).unwrap();
        assert_eq!(back, vol);
    }

    #[test]
    fn volume_errors_carry_offsets() {
        let vol = TextureGrid::from_fn_3d([2, 2, 2], 2, |_, _, _, _| 1.0).unwrap();
        let bytes = encode_volume(&vol);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_volume(&bad), Err(Error::Format { offset: 0, .. })));

        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(
            decode_volume(truncated),
            Err(Error::Format { offset, .. }) if offset == truncated.len() as u64
        ));

        let mut huge = bytes.clone();
        huge[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        huge[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
        huge[16..20].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_volume(&huge).is_err());

        assert!(matches!(decode_volume(&bytes[..10]), Err(Error::Format { .. })));
    }
}
