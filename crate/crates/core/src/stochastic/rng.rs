//! Counter-based random streams.
//!
//! A stream is a pure function of `(seed, pixel, sample, dimension)`, so any
//! worker can rebuild the exact uniforms of any pixel sample without shared
//! state.

/// Largest `f64` below one.
pub const ONE_MINUS_EPSILON: f64 = 1.0 - f64::EPSILON / 2.0;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic stream of uniforms in `[0, 1)` keyed by seed, pixel index
/// and sample index. Each call to [`RngStream::uniform`] advances the
/// dimension index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    key: u64,
    dimension: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::for_sample(seed, 0, 0)
    }

    /// Stream for one sample of one pixel.
    pub fn for_sample(seed: u64, pixel: u64, sample: u64) -> Self {
        let key =
            mix64(seed ^ mix64(pixel.wrapping_mul(GOLDEN_GAMMA) ^ mix64(sample.wrapping_add(0x632B_E59B_D9B4_E019))));
        RngStream {
            seed,
            key,
            dimension: 0,
        }
    }

    /// Same seed, different pixel and sample.
    pub fn derive(&self, pixel: u64, sample: u64) -> Self {
        Self::for_sample(self.seed, pixel, sample)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dimension(&self) -> u64 {
        self.dimension
    }

    /// Jumps to a given dimension index.
    pub fn at_dimension(mut self, dimension: u64) -> Self {
        self.dimension = dimension;
        self
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(
            self.key
                .wrapping_add(self.dimension.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        );
        self.dimension += 1;
        out
    }

    /// Next uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
