//! One-dimensional reconstruction kernels.
//!
//! Offsets are measured in texels from the lookup point. A texel at integer
//! position `k` contributes to a lookup at `s` with weight `K(s - k)`.
//! Supports are half-open: a kernel evaluates to exactly zero at its support
//! radius so a window never counts a boundary texel twice.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::f64::consts::PI;

use crate::{Error, Result};

/// Recommended Keys cubic parameter (Catmull-Rom).
pub const DEFAULT_KEYS_A: f64 = -0.5;

/// A 1D reconstruction kernel family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// Unit box, nearest-neighbour reconstruction.
    Box,
    /// Unit tent, linear interpolation.
    Tent,
    /// Keys interpolating cubic with free parameter `a`.
    KeysCubic { a: f64 },
    /// Approximating (non-interpolating) cubic B-spline.
    CubicBSpline,
    /// Windowed sinc with `lobes` lobes on each side.
    Lanczos { lobes: u32 },
    /// Normalized Gaussian with standard deviation `sigma`, truncated at
    /// `radius` texels.
    Gaussian { sigma: f64, radius: f64 },
}

impl KernelSpec {
    pub fn keys() -> Self {
        KernelSpec::KeysCubic { a: DEFAULT_KEYS_A }
    }

    /// Gaussian truncated at `3 sigma`, rounded up to a whole texel.
    pub fn gaussian(sigma: f64) -> Self {
        KernelSpec::Gaussian {
            sigma,
            radius: (3.0 * sigma).ceil().max(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Box | KernelSpec::Tent | KernelSpec::CubicBSpline => Ok(()),
            KernelSpec::KeysCubic { a } if a.is_finite() => Ok(()),
            KernelSpec::KeysCubic { a } => Err(Error::param(format!("Keys parameter {a} is not finite"))),
            KernelSpec::Lanczos { lobes } if lobes >= 1 => Ok(()),
            KernelSpec::Lanczos { .. } => Err(Error::param("Lanczos needs at least one lobe")),
            KernelSpec::Gaussian { sigma, radius } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    Err(Error::param(format!("Gaussian sigma must be positive, got {sigma}")))
                } else if !(radius > 0.0 && radius.is_finite()) {
                    Err(Error::param(format!("Gaussian radius must be positive, got {radius}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Half-width of the kernel's support in texels.
    pub fn support_radius(&self) -> f64 {
        match *self {
            KernelSpec::Box => 0.5,
            KernelSpec::Tent => 1.0,
            KernelSpec::KeysCubic { .. } | KernelSpec::CubicBSpline => 2.0,
            KernelSpec::Lanczos { lobes } => lobes as f64,
            KernelSpec::Gaussian { radius, .. } => radius,
        }
    }

    /// Smallest window that covers the support at every fractional offset.
    pub fn min_taps(&self) -> usize {
        2 * self.support_radius().ceil() as usize
    }

    /// True when the discrete window sums to one at every offset without
    /// renormalization.
    pub fn is_partition_of_unity(&self) -> bool {
        matches!(
            self,
            KernelSpec::Tent | KernelSpec::KeysCubic { .. } | KernelSpec::CubicBSpline
        )
    }

    /// Evaluates the kernel at offset `t`. The spec is assumed valid; use
    /// [`kernel_eval`] for a checked evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        let x = t.abs();
        match *self {
            KernelSpec::Box => {
                if x < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelSpec::Tent => {
                if x < 1.0 {
                    1.0 - x
                } else {
                    0.0
                }
            }
            KernelSpec::KeysCubic { a } => {
                if x < 1.0 {
                    ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
                } else if x < 2.0 {
                    ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
                } else {
                    0.0
                }
            }
            KernelSpec::CubicBSpline => {
                if x <= 1.0 {
                    (4.0 - 3.0 * x * x * (2.0 - x)) / 6.0
                } else if x < 2.0 {
                    let y = 2.0 - x;
                    y * y * y / 6.0
                } else {
                    0.0
                }
            }
            KernelSpec::Lanczos { lobes } => {
                let n = lobes as f64;
                if x == 0.0 {
                    1.0
                } else if x < n {
                    let px = PI * x;
                    n * px.sin() * (px / n).sin() / (px * px)
                } else {
                    0.0
                }
            }
            KernelSpec::Gaussian { sigma, radius } => {
                if x < radius {
                    (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
                } else {
                    0.0
                }
            }
        }
    }

    /// Weights for the `taps` texels around a lookup with fractional offset
    /// `frac`. See [`kernel_weights_window`].
    pub fn window(&self, frac: f64, taps: usize) -> Result<Window> {
        kernel_weights_window(self, frac, taps)
    }
}

/// Checked kernel evaluation.
pub fn kernel_eval(spec: &KernelSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    Ok(spec.eval(t))
}

/// Discrete kernel weights for consecutive texels.
///
/// `weights[i]` belongs to the texel at `floor(s) + first_offset + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub first_offset: i64,
    pub weights: SmallVec<[f64; 8]>,
    pub sum: f64,
}

impl Window {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Divides every weight by the window sum. A zero-sum window is left
    /// untouched.
    pub fn normalized(mut self) -> Self {
        if self.sum != 0.0 && self.sum != 1.0 {
            let inv = 1.0 / self.sum;
            self.weights.iter_mut().for_each(|w| *w *= inv);
            self.sum = self.weights.iter().sum();
        }
        self
    }

    pub fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.weights.len() as i64).map(move |i| self.first_offset + i)
    }
}

/// Weights for a window of `taps` texels (even, at least the kernel support)
/// centred on the lookup. Partition-of-unity kernels come back summing to
/// one; Lanczos and Gaussian windows are returned raw with their sum.
pub fn kernel_weights_window(spec: &KernelSpec, frac: f64, taps: usize) -> Result<Window> {
    spec.validate()?;
    if !(0.0..1.0).contains(&frac) {
        return Err(Error::param(format!("fractional offset {frac} outside [0, 1)")));
    }
    if taps < spec.min_taps() {
        return Err(Error::param(format!(
            "{taps} taps do not cover the {:?} support (need {})",
            spec,
            spec.min_taps()
        )));
    }
    if !taps.is_multiple_of(2) {
        return Err(Error::param(format!("window must have an even tap count, got {taps}")));
    }
    let first_offset = 1 - (taps / 2) as i64;
    let weights: SmallVec<[f64; 8]> = (0..taps as i64)
        .map(|i| spec.eval(frac - (first_offset + i) as f64))
        .collect();
    let sum = weights.iter().sum();
    Ok(Window {
        first_offset,
        weights,
        sum,
    })
}

/// Centred cardinal B-spline of the given degree, built with the Cox-de Boor
/// recursion on integer knots. Degree 0 is the unit box, degree 1 the tent,
/// degree 3 the cubic B-spline.
pub fn cardinal_bspline(degree: u32, t: f64) -> f64 {
    fn basis(k: u32, x: f64) -> f64 {
        if k == 0 {
            return if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 };
        }
        let kf = k as f64;
        (x * basis(k - 1, x) + (kf + 1.0 - x) * basis(k - 1, x - 1.0)) / kf
    }
    basis(degree, t + (degree as f64 + 1.0) * 0.5)
}

/// Weights of the degree-`degree` cardinal B-spline over every texel it can
/// touch for a lookup with fractional offset `frac`.
pub fn bspline_window(degree: u32, frac: f64) -> Window {
    let half = (degree as i64 + 2) / 2;
    let first_offset = -half;
    let weights: SmallVec<[f64; 8]> = (0..=2 * half)
        .map(|i| cardinal_bspline(degree, frac - (first_offset + i) as f64))
        .collect();
    let sum = weights.iter().sum();
    Window {
        first_offset,
        weights,
        sum,
    }
}
