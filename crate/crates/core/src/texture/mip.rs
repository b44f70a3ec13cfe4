use super::{FetchCounter, Texel, TexelSource, TextureGrid};

/// A chain of successively half-resolution textures, level 0 finest.
#[derive(Debug, Clone, PartialEq)]
pub struct MipPyramid {
    levels: Vec<TextureGrid>,
}

impl MipPyramid {
    pub fn level(&self, level: usize) -> &TextureGrid {
        &self.levels[level]
    }

    pub fn iter(&self) -> impl Iterator<Item = &TextureGrid> {
        self.levels.iter()
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn base(&self) -> &TextureGrid {
        &self.levels[0]
    }
}

/// Builds the full pyramid by repeated box downsampling. Each level halves
/// every dimension rounding up, down to a single texel. Even dimensions
/// average texel pairs; odd ones use area weights over the stretched source
/// footprint so the level mean is preserved.
pub fn build_mip_pyramid(tex: &TextureGrid) -> MipPyramid {
    let mut levels = vec![tex.clone()];
    loop {
        let prev = levels.last().unwrap();
        if prev.dims.iter().all(|&d| d == 1) {
            break;
        }
        let next = downsample(prev);
        levels.push(next);
    }
    MipPyramid { levels }
}

/// Source texels and weights for each output texel along one axis.
fn axis_weights(n: usize) -> Vec<Vec<(usize, f64)>> {
    let m = n.div_ceil(2);
    let span = n as f64 / m as f64;
    (0..m)
        .map(|j| {
            let (lo, hi) = (j as f64 * span, (j + 1) as f64 * span);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n);
            (first..last)
                .filter_map(|i| {
                    let overlap = hi.min(i as f64 + 1.0) - lo.max(i as f64);
                    (overlap > 0.0).then_some((i, overlap / span))
                })
                .collect()
        })
        .collect()
}

fn downsample(src: &TextureGrid) -> TextureGrid {
    let [w, h, d] = src.dims;
    let volume = src.ndim() == 3;
    let ax = axis_weights(w);
    let ay = axis_weights(h);
    let az = if volume { axis_weights(d) } else { vec![vec![(0, 1.0)]] };
    let nd = [ax.len(), ay.len(), az.len()];
    let ch = src.channels;
    let mut data = Vec::with_capacity(nd.iter().product::<usize>() * ch);
    for wz in &az {
        for wy in &ay {
            for wx in &ax {
                let mut acc = [0.0f64; super::MAX_CHANNELS];
                for &(sz, kz) in wz {
                    for &(sy, ky) in wy {
                        for &(sx, kx) in wx {
                            let k = kx * ky * kz;
                            let o = src.offset(sx, sy, sz);
                            for c in 0..ch {
                                acc[c] += k * src.data[o + c] as f64;
                            }
                        }
                    }
                }
                data.extend(acc[..ch].iter().map(|&v| v as f32));
            }
        }
    }
    TextureGrid {
        dims: nd,
        ndim: src.ndim,
        channels: ch,
        data,
        address_mode: src.address_mode,
        color_space: src.color_space,
    }
}

impl TexelSource for MipPyramid {
    fn dims(&self) -> [usize; 3] {
        self.levels[0].dims
    }

    fn channels(&self) -> usize {
        self.levels[0].channels
    }

    fn levels(&self) -> usize {
        self.levels.len()
    }

    fn level_dims(&self, level: usize) -> [usize; 3] {
        self.levels[level].dims
    }

    #[inline]
    fn fetch(&self, level: usize, coord: [i64; 3], counter: &mut FetchCounter) -> Texel {
        self.levels[level].fetch_texel(coord, counter)
    }
}
