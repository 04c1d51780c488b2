use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{GridSpec, PotentialField, QuantumError, WaveField};
use crate::constants::{ELECTRON_VOLT, HBAR};

/// Default bound on the estimated per-step splitting error (J).
pub const DEFAULT_ENERGY_TOLERANCE: f64 = 1e-5 * ELECTRON_VOLT;

/// Strang split-step Fourier propagator, `e^{−iVdt/2ħ} e^{−iTdt/ħ} e^{−iVdt/2ħ}`.
pub struct SplitStepPropagator {
    grid: GridSpec,
    mass: f64,
    dt: f64,
    kinetic: Vec<Complex64>,
    mask: Option<Vec<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    half_phase: Option<Vec<Complex64>>,
    energy_tolerance: f64,
}

impl Clone for SplitStepPropagator {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            mass: self.mass,
            dt: self.dt,
            kinetic: self.kinetic.clone(),
            mask: self.mask.clone(),
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
            scratch: vec![Complex64::default(); self.scratch.len()],
            half_phase: self.half_phase.clone(),
            energy_tolerance: self.energy_tolerance,
        }
    }
}

impl SplitStepPropagator {
    pub fn new(grid: GridSpec, mass: f64, dt: f64) -> Result<Self, QuantumError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(QuantumError::InvalidTimeStep { dt });
        }
        let n = grid.n_points;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let scale = 1.0 / n as f64;
        let kinetic = grid
            .wavenumbers()
            .into_iter()
            .map(|k| Complex64::from_polar(scale, -HBAR * k * k * dt / (2.0 * mass)))
            .collect();
        Ok(Self {
            grid,
            mass,
            dt,
            kinetic,
            mask: grid.mask(),
            forward,
            inverse,
            scratch: vec![Complex64::default(); scratch_len],
            half_phase: None,
            energy_tolerance: DEFAULT_ENERGY_TOLERANCE,
        })
    }

    pub fn with_energy_tolerance(mut self, tolerance: f64) -> Self {
        self.energy_tolerance = tolerance;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Installs `potential` for subsequent steps; `None` means free evolution.
    ///
    /// The splitting-error estimate dt²·max|V′|²/(24m) is taken over the
    /// support of `psi` and checked against the tolerance.
    pub fn set_potential(&mut self, potential: Option<&PotentialField>, psi: &WaveField) -> Result<(), QuantumError> {
        let Some(v) = potential else {
            self.half_phase = None;
            return Ok(());
        };
        v.check(&self.grid)?;
        let estimate = self.splitting_error(v, psi);
        if estimate > self.energy_tolerance {
            return Err(QuantumError::EnergyTolerance { estimate, tolerance: self.energy_tolerance });
        }
        let factor = -0.5 * self.dt / HBAR;
        self.half_phase = Some(v.values.iter().map(|&e| Complex64::from_polar(1.0, factor * e)).collect());
        Ok(())
    }

    fn splitting_error(&self, v: &PotentialField, psi: &WaveField) -> f64 {
        let floor = super::NODE_THRESHOLD * psi.max_density();
        let dx = self.grid.dx;
        let max_force_sq = (1..v.values.len() - 1)
            .filter(|&i| psi.amplitudes[i].norm_sqr() > floor)
            .map(|i| ((v.values[i + 1] - v.values[i - 1]) / (2.0 * dx)).powi(2))
            .fold(0.0, f64::max);
        self.dt * self.dt * max_force_sq / (24.0 * self.mass)
    }

    /// Advances `psi` by one step with the installed potential.
    pub fn step(&mut self, psi: &mut WaveField) -> Result<(), QuantumError> {
        if psi.grid != self.grid {
            return Err(QuantumError::GridMismatch);
        }
        let amps = &mut psi.amplitudes;
        if let Some(phase) = &self.half_phase {
            amps.iter_mut().zip(phase).for_each(|(a, p)| *a *= p);
        }
        self.forward.process_with_scratch(amps, &mut self.scratch);
        amps.iter_mut().zip(&self.kinetic).for_each(|(a, k)| *a *= k);
        self.inverse.process_with_scratch(amps, &mut self.scratch);
        if let Some(phase) = &self.half_phase {
            amps.iter_mut().zip(phase).for_each(|(a, p)| *a *= p);
        }
        if let Some(mask) = &self.mask {
            amps.iter_mut().zip(mask).filter(|(_, &m)| m < 1.0).for_each(|(a, &m)| *a *= m);
        }
        psi.time += self.dt;
        if !psi.is_finite() {
            return Err(QuantumError::NonFiniteAmplitude);
        }
        Ok(())
    }
}

/// One propagation step of `psi` under `potential` (plans a fresh propagator).
pub fn propagate_step(psi: &WaveField, potential: &PotentialField, dt: f64) -> Result<WaveField, QuantumError> {
    let mut prop = SplitStepPropagator::new(psi.grid, psi.mass, dt)?;
    prop.set_potential(Some(potential), psi)?;
    let mut out = psi.clone();
    prop.step(&mut out)?;
    Ok(out)
}
