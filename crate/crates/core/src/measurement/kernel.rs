use serde::Serialize;

use super::{MeasurementError, PointerDistribution};
use crate::quantum::MomentumSpectrum;

/// Smallest ratio of pointer spread to system current spread accepted by [`extract_kernel`].
pub const MIN_KERNEL_RATIO: f64 = 10.0;

/// Pointer response g(Ĩ, I), stored as a recentred histogram: g(Ĩ, I) = h(Ĩ − I).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResponseKernel {
    /// Offsets Ĩ − I of the bin centres (A).
    pub offsets: Vec<f64>,
    /// Density per bin (1/A).
    pub density: Vec<f64>,
    pub width: f64,
    /// Pointer spread over system spread.
    pub ratio: f64,
}

impl ResponseKernel {
    pub fn value(&self, reading: f64, current: f64) -> f64 {
        let d = reading - current;
        let first = self.offsets[0] - 0.5 * self.width;
        let s = (d - first) / self.width;
        if s < 0.0 || s >= self.density.len() as f64 {
            return 0.0;
        }
        self.density[s as usize]
    }

    pub fn mean_offset(&self) -> f64 {
        self.offsets.iter().zip(&self.density).map(|(o, d)| o * d * self.width).sum()
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean_offset();
        self.offsets.iter().zip(&self.density).map(|(o, d)| (o - m).powi(2) * d * self.width).sum::<f64>().sqrt()
    }
}

/// Response kernel under the narrow-system approximation g(Ĩ, ⟨I⟩) ≈ P(Ĩ).
pub fn extract_kernel(
    distribution: &PointerDistribution,
    spectrum: &MomentumSpectrum,
    mass: f64,
    device_length: f64,
    charge: f64,
) -> Result<ResponseKernel, MeasurementError> {
    let to_current = charge.abs() / (mass * device_length);
    let system_spread = spectrum.std_dev() * to_current;
    let pointer_spread = distribution.summary().std_dev();
    let ratio = if system_spread > 0.0 { pointer_spread / system_spread } else { f64::INFINITY };
    if !(ratio >= MIN_KERNEL_RATIO) {
        return Err(MeasurementError::KernelNotExtractable { ratio, required: MIN_KERNEL_RATIO });
    }
    let center = spectrum.mean() * to_current * charge.signum();
    let n = distribution.counts.len();
    Ok(ResponseKernel {
        offsets: (0..n).map(|i| distribution.bin_center(i) - center).collect(),
        density: (0..n).map(|i| distribution.density(i)).collect(),
        width: distribution.width,
        ratio,
    })
}
