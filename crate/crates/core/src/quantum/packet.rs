use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GridSpec, QuantumError, WaveField};
use crate::constants::{speed_from_energy, HBAR};

/// One Gaussian component of the initial state.
///
/// `sigma` is the standard deviation of |ψ|², so the amplitude envelope is
/// `exp(−(x−center)²/(4σ²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacketSpec {
    pub center: f64,
    pub sigma: f64,
    pub velocity: f64,
    pub relative_phase: f64,
    pub weight: f64,
}

impl GaussianPacketSpec {
    /// Packet moving towards +x with the given kinetic energy.
    pub fn from_energy(center: f64, sigma: f64, energy_ev: f64, mass: f64) -> Self {
        Self { center, sigma, velocity: speed_from_energy(energy_ev, mass), relative_phase: 0.0, weight: 1.0 }
    }

    pub fn wavenumber(&self, mass: f64) -> f64 {
        mass * self.velocity / HBAR
    }

    fn validate(&self) -> Result<(), QuantumError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(QuantumError::InvalidPacket(format!("width {:e} m must be positive", self.sigma)));
        }
        if ![self.center, self.velocity, self.relative_phase, self.weight].iter().all(|v| v.is_finite()) {
            return Err(QuantumError::InvalidPacket("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Weighted, individually normalized component at `x` (t = 0).
    pub fn amplitude(&self, x: f64, mass: f64) -> Complex64 {
        let norm = (2.0 * std::f64::consts::PI * self.sigma * self.sigma).powf(-0.25);
        let d = x - self.center;
        let envelope = norm * (-d * d / (4.0 * self.sigma * self.sigma)).exp();
        Complex64::from_polar(self.weight * envelope, self.wavenumber(mass) * x + self.relative_phase)
    }
}

/// Normalized superposition of Gaussian packets sampled on `grid` at t = 0.
pub fn build_superposition(
    specs: &[GaussianPacketSpec],
    grid: &GridSpec,
    mass: f64,
    charge: f64,
) -> Result<WaveField, QuantumError> {
    if specs.is_empty() || specs.iter().all(|s| s.weight == 0.0) {
        return Err(QuantumError::NotNormalizable);
    }
    let (lo, hi) = grid.interior();
    for s in specs {
        s.validate()?;
        if s.weight != 0.0 && (s.center - 5.0 * s.sigma < lo || s.center + 5.0 * s.sigma > hi) {
            return Err(QuantumError::PacketOutsideGrid { center: s.center, sigma: s.sigma });
        }
    }
    let amplitudes = (0..grid.n_points)
        .map(|i| {
            let x = grid.x(i);
            specs.iter().map(|s| s.amplitude(x, mass)).sum()
        })
        .collect();
    let mut psi = WaveField::new(*grid, amplitudes, mass, charge, 0.0)?;
    psi.normalize()?;
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE, NANOMETER};

    fn grid() -> GridSpec {
        GridSpec::for_device(280.0 * NANOMETER)
    }

    #[test]
    fn rejects_empty_and_zero_weights() {
        let mut p = GaussianPacketSpec::from_energy(60e-9, 3e-9, 0.0905, ELECTRON_MASS);
        assert_eq!(
            build_superposition(&[], &grid(), ELECTRON_MASS, ELEMENTARY_CHARGE),
            Err(QuantumError::NotNormalizable)
        );
        p.weight = 0.0;
        assert_eq!(
            build_superposition(&[p, p], &grid(), ELECTRON_MASS, ELEMENTARY_CHARGE),
            Err(QuantumError::NotNormalizable)
        );
    }

    #[test]
    fn rejects_packets_beyond_margin() {
        let p = GaussianPacketSpec::from_energy(600e-9, 3e-9, 0.0905, ELECTRON_MASS);
        assert!(matches!(
            build_superposition(&[p], &grid(), ELECTRON_MASS, ELEMENTARY_CHARGE),
            Err(QuantumError::PacketOutsideGrid { .. })
        ));
        let bad = GaussianPacketSpec { sigma: 0.0, ..p };
        assert!(matches!(
            build_superposition(&[bad], &grid(), ELECTRON_MASS, ELEMENTARY_CHARGE),
            Err(QuantumError::InvalidPacket(_))
        ));
    }

    #[test]
    fn two_lobe_state_is_normalized() {
        let a = GaussianPacketSpec::from_energy(60.0 * NANOMETER, 3.0 * NANOMETER, 0.0905, ELECTRON_MASS);
        let b = GaussianPacketSpec { center: 110.0 * NANOMETER, ..a };
        let psi = build_superposition(&[a, b], &grid(), ELECTRON_MASS, ELEMENTARY_CHARGE).unwrap();
        assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        let rho = psi.density();
        let at = |x: f64| rho[((x - psi.grid.x_min) / psi.grid.dx).round() as usize];
        assert!((at(60e-9) - at(110e-9)).abs() / at(60e-9) < 1e-6);
        assert!(at(85e-9) < 1e-12 * at(60e-9));
    }
}
