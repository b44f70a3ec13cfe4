/// Anisotropy clamp used by the real-time LOD computation.
pub const DEFAULT_MAX_ANISOTROPY: f64 = 64.0;

/// Result of the anisotropic LOD computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisoLod {
    pub lod: f64,
    /// Longer footprint axis, texels.
    pub major_axis: [f64; 2],
    /// Shorter footprint axis after the anisotropy clamp, texels.
    pub minor_axis: [f64; 2],
}

/// Level of detail from the minor axis of the texture-space footprint.
///
/// `grads` holds `(du/dx, dv/dx, du/dy, dv/dy)` in normalized texture
/// coordinates; `dims` scales u by the width and v by the height. When the
/// axis ratio exceeds `max_aniso` the minor axis is lengthened until it
/// doesn't, trading blur for bounded filter cost.
pub fn compute_aniso_lod(dims: [usize; 2], grads: [f64; 4], min_lod: f64, max_lod: f64, max_aniso: f64) -> AnisoLod {
    let (w, h) = (dims[0] as f64, dims[1] as f64);
    let x_axis = [w * grads[0], h * grads[1]];
    let y_axis = [w * grads[2], h * grads[3]];
    let len2 = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
    let (mut minor, major) = if len2(x_axis) > len2(y_axis) {
        (y_axis, x_axis)
    } else {
        (x_axis, y_axis)
    };
    let mut minor_len = len2(minor).sqrt();
    let major_len = len2(major).sqrt();
    if minor_len > 0.0 && minor_len * max_aniso < major_len {
        let scale = major_len / (minor_len * max_aniso);
        minor_len *= scale;
        minor = [minor[0] * scale, minor[1] * scale];
    }
    AnisoLod {
        lod: minor_len.log2().clamp(min_lod, max_lod),
        major_axis: major,
        minor_axis: minor,
    }
}

/// Maps a level-0 raster coordinate to the raster coordinate of `level`,
/// keeping texel centres at integers on every level.
#[inline]
pub fn level_coord(s: f64, level: usize) -> f64 {
    (s + 0.5) / (1u64 << level) as f64 - 0.5
}
