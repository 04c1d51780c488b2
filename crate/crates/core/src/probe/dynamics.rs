use std::sync::Arc;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{BackgroundField, CableRegion, ProbeElectron, ProbeError, ThermostatParams};
use crate::constants::{coulomb_factor, BOLTZMANN};
use crate::electrostatics::Aabb;

/// Particle properties shared by all probe electrons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeModel {
    pub mass: f64,
    pub charge: f64,
    /// Coulomb softening length.
    pub softening: f64,
    pub permittivity: f64,
}

/// Electron gas of one cable together with the forces at its current configuration.
#[derive(Clone, Debug)]
pub struct ProbeCable {
    region: CableRegion,
    electrons: Vec<ProbeElectron>,
    forces: Vec<Vector3<f64>>,
    background: Arc<BackgroundField>,
    model: ProbeModel,
}

impl ProbeCable {
    /// `system` is the x position of the system electron on the device line, if it interacts.
    pub fn new(
        region: CableRegion,
        electrons: Vec<ProbeElectron>,
        background: Arc<BackgroundField>,
        model: ProbeModel,
        system: Option<f64>,
    ) -> Result<Self, ProbeError> {
        region.validate()?;
        let mut cable = Self { region, forces: vec![Vector3::zeros(); electrons.len()], electrons, background, model };
        cable.update_forces(system);
        Ok(cable)
    }

    pub fn region(&self) -> &CableRegion {
        &self.region
    }

    pub fn electrons(&self) -> &[ProbeElectron] {
        &self.electrons
    }

    pub fn forces(&self) -> &[Vector3<f64>] {
        &self.forces
    }

    pub fn positions(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        self.electrons.iter().map(|e| e.position)
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.model.mass * self.electrons.iter().map(|e| e.velocity.norm_squared()).sum::<f64>()
    }

    fn update_forces(&mut self, system: Option<f64>) {
        let k = coulomb_factor(self.model.charge, self.model.charge, self.model.permittivity);
        let a2 = self.model.softening * self.model.softening;
        let n = self.electrons.len();
        for (f, e) in self.forces.iter_mut().zip(&self.electrons) {
            *f = self.background.field(&e.position) * self.model.charge;
            if let Some(x) = system {
                let d = e.position - Vector3::new(x, 0.0, 0.0);
                *f += d * (k / (d.norm_squared() + a2).powf(1.5));
            }
        }
        for i in 0..n {
            let ri = self.electrons[i].position;
            let mut fi = Vector3::zeros();
            for j in i + 1..n {
                let d = ri - self.electrons[j].position;
                let r2 = d.norm_squared() + a2;
                let pair = d * (k / (r2 * r2.sqrt()));
                fi += pair;
                self.forces[j] -= pair;
            }
            self.forces[i] += fi;
        }
    }

    /// One BAOAB Langevin step; `system` is the system electron position used
    /// for the end-of-step forces.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        system: Option<f64>,
        thermostat: &ThermostatParams,
        dt: f64,
        rng: &mut R,
    ) -> Result<(), ProbeError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(ProbeError::InvalidTimeStep { dt });
        }
        let m = self.model.mass;
        let damp = (-thermostat.friction * dt).exp();
        let kick = ((1.0 - damp * damp) * BOLTZMANN * thermostat.temperature / m).sqrt();
        let bounds = self.region.bounds;
        for (e, f) in self.electrons.iter_mut().zip(&self.forces) {
            e.velocity += f * (0.5 * dt / m);
            e.position += e.velocity * (0.5 * dt);
            reflect(&bounds, e);
            if kick > 0.0 {
                let noise = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
                e.velocity = e.velocity * damp + noise * kick;
            } else {
                e.velocity *= damp;
            }
            e.position += e.velocity * (0.5 * dt);
            reflect(&bounds, e);
        }
        self.update_forces(system);
        for (e, f) in self.electrons.iter_mut().zip(&self.forces) {
            e.velocity += f * (0.5 * dt / m);
        }
        Ok(())
    }
}

/// Specular reflection off the box walls.
fn reflect(bounds: &Aabb, e: &mut ProbeElectron) {
    for k in 0..3 {
        let (lo, hi) = (bounds.min[k], bounds.max[k]);
        let mut x = e.position[k];
        let mut flips = 0;
        while x < lo || x > hi {
            x = if x < lo { 2.0 * lo - x } else { 2.0 * hi - x };
            flips += 1;
            if flips > 8 {
                x = x.clamp(lo, hi);
                break;
            }
        }
        if flips % 2 == 1 {
            e.velocity[k] = -e.velocity[k];
        }
        e.position[k] = x;
    }
}

/// Advances `cable` by one Langevin step of length `dt`.
pub fn step_probe<R: Rng + ?Sized>(
    cable: &mut ProbeCable,
    system: Option<f64>,
    thermostat: &ThermostatParams,
    dt: f64,
    rng: &mut R,
) -> Result<(), ProbeError> {
    cable.step(system, thermostat, dt, rng)
}
