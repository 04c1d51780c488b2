use nalgebra::Vector3;

use super::{GridSpec, QuantumError, WaveField};
use crate::constants::coulomb_factor;

/// Potential energy (J) sampled on the wave-function grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    pub values: Vec<f64>,
}

impl PotentialField {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self { values: vec![value; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check(&self, grid: &GridSpec) -> Result<(), QuantumError> {
        if self.values.len() != grid.n_points {
            return Err(QuantumError::PotentialMismatch { expected: grid.n_points, got: self.values.len() });
        }
        if !self.is_finite() {
            return Err(QuantumError::NonFinitePotential);
        }
        Ok(())
    }
}

/// Softened Coulomb energy of the system charge on the line y = z = 0
/// due to like charges at `probes`.
pub fn conditional_potential(
    charge: f64,
    probes: &[Vector3<f64>],
    grid: &GridSpec,
    softening: f64,
    permittivity: f64,
) -> PotentialField {
    let k = coulomb_factor(charge, charge, permittivity);
    let a2 = softening * softening;
    let transverse: Vec<(f64, f64)> = probes.iter().map(|p| (p.x, p.y * p.y + p.z * p.z + a2)).collect();
    let values = (0..grid.n_points)
        .map(|i| {
            let x = grid.x(i);
            transverse
                .iter()
                .map(|&(px, rho2)| {
                    let d = x - px;
                    k / (d * d + rho2).sqrt()
                })
                .sum()
        })
        .collect();
    PotentialField { values }
}

/// ∫|ψ − ψ_ref|² dx.
pub fn wavefunction_error(psi: &WaveField, reference: &WaveField) -> Result<f64, QuantumError> {
    if psi.grid != reference.grid {
        return Err(QuantumError::GridMismatch);
    }
    Ok(psi.amplitudes.iter().zip(&reference.amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * psi.grid.dx)
}
