use serde::{Deserialize, Serialize};

use super::ElectrostaticsError;
use crate::constants::{HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};

pub const DEFAULT_CLASSICALITY_RATIO: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalityVerdict {
    /// Mean squared field, (N/C)².
    pub field_squared: f64,
    /// ħ/(c³Δt⁴ε0), (N/C)².
    pub threshold: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Squared field below which a measurement over `interval` resolves single photons.
pub fn classicality_threshold(interval: f64) -> Result<f64, ElectrostaticsError> {
    if !(interval > 0.0) || !interval.is_finite() {
        return Err(ElectrostaticsError::InvalidInterval { dt: interval });
    }
    Ok(HBAR / (SPEED_OF_LIGHT.powi(3) * interval.powi(4) * VACUUM_PERMITTIVITY))
}

/// Compares |E|² with the photon threshold; passes when the ratio reaches `min_ratio`.
pub fn classicality_margin(
    field_squared: f64,
    interval: f64,
    min_ratio: f64,
) -> Result<ClassicalityVerdict, ElectrostaticsError> {
    let threshold = classicality_threshold(interval)?;
    let ratio = field_squared / threshold;
    Ok(ClassicalityVerdict { field_squared, threshold, ratio, pass: ratio >= min_ratio && ratio > 1.0 })
}

/// Mean field magnitude over a surface carrying total flux `flux`.
pub fn mean_field_from_flux(flux: f64, area: f64) -> f64 {
    flux / area
}
