//! The sRGB transfer function.

use crate::{Error, Result};

/// Decodes an sRGB-encoded value to linear light. Inputs outside `[0, 1]`
/// are clamped.
pub fn srgb_to_linear(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Encodes a linear value with the sRGB curve. Inputs outside `[0, 1]` are
/// clamped.
pub fn linear_to_srgb(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Like [`srgb_to_linear`] but rejects out-of-range input.
pub fn srgb_to_linear_strict(v: f64) -> Result<f64> {
    check_unit(v)?;
    Ok(srgb_to_linear(v))
}

/// Like [`linear_to_srgb`] but rejects out-of-range input.
pub fn linear_to_srgb_strict(v: f64) -> Result<f64> {
    check_unit(v)?;
    Ok(linear_to_srgb(v))
}

fn check_unit(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(format!("colour value {v} outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints() {
        assert_eq!(srgb_to_linear(0.0), 0.0);
        assert_eq!(srgb_to_linear(1.0), 1.0);
        assert_eq!(linear_to_srgb(0.0), 0.0);
        assert!((linear_to_srgb(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn midpoint() {
        // ((0.5 + 0.055) / 1.055)^2.4
        assert!((srgb_to_linear(0.5) - 0.214_041_140_482_232_55).abs() < 1e-12);
        assert!((srgb_to_linear(128.0 / 255.0) - 0.215_860_500_113_899_26).abs() < 1e-12);
    }

    #[test]
    fn round_trip() {
        assert!((linear_to_srgb(srgb_to_linear(0.73)) - 0.73).abs() < 1e-6);
    }

    #[test]
    fn clamping_and_strict() {
        assert_eq!(srgb_to_linear(1.5), 1.0);
        assert_eq!(srgb_to_linear(-0.2), 0.0);
        assert!(srgb_to_linear_strict(1.5).is_err());
        assert!(linear_to_srgb_strict(-0.1).is_err());
        assert!(srgb_to_linear_strict(0.3).is_ok());
    }

    proptest! {
        #[test]
        fn inverse_composition(v in 0.0f64..=1.0) {
            prop_assert!((linear_to_srgb(srgb_to_linear(v)) - v).abs() < 1e-6);
        }
    }
}
