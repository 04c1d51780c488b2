use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::constants::BOLTZMANN;
use crate::electrostatics::Aabb;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CableRegion {
    pub bounds: Aabb,
    /// Number of mobile electrons N_P.
    pub count: usize,
    pub temperature: f64,
    /// Gap between the cable and the device end.
    pub distance: f64,
}

impl CableRegion {
    pub fn validate(&self) -> Result<(), ProbeError> {
        if !(self.bounds.volume() > 0.0) {
            return Err(ProbeError::InvalidRegion(format!(
                "box volume {:e} m³ must be positive",
                self.bounds.volume()
            )));
        }
        if self.count == 0 {
            return Err(ProbeError::InvalidRegion("electron count must be at least 1".into()));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(ProbeError::InvalidRegion(format!("temperature {} K must be positive", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermostatParams {
    /// Langevin friction γ (1/s).
    pub friction: f64,
    pub temperature: f64,
}

impl Default for ThermostatParams {
    fn default() -> Self {
        Self { friction: 1e13, temperature: 300.0 }
    }
}

impl ThermostatParams {
    pub fn validate(&self) -> Result<(), ProbeError> {
        if !(self.friction >= 0.0) || !self.friction.is_finite() {
            return Err(ProbeError::InvalidThermostat(format!(
                "friction {:e} 1/s must be non-negative",
                self.friction
            )));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(ProbeError::InvalidThermostat(format!("temperature {} K must be positive", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeElectron {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

/// Uniform positions in the box and Maxwell–Boltzmann velocities at the region temperature.
pub fn init_probe<R: Rng + ?Sized>(
    region: &CableRegion,
    mass: f64,
    rng: &mut R,
) -> Result<Vec<ProbeElectron>, ProbeError> {
    region.validate()?;
    let thermal = (BOLTZMANN * region.temperature / mass).sqrt();
    let (lo, size) = (region.bounds.min, region.bounds.size());
    Ok((0..region.count)
        .map(|_| {
            let position = Vector3::from_fn(|k, _| lo[k] + size[k] * rng.gen::<f64>());
            let velocity = Vector3::from_fn(|_, _| thermal * rng.sample::<f64, _>(StandardNormal));
            ProbeElectron { position, velocity }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ELECTRON_MASS;
    use crate::stats::Summary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn region(count: usize) -> CableRegion {
        CableRegion {
            bounds: Aabb::new(Vector3::new(300e-9, -5e-9, -5e-9), Vector3::new(340e-9, 5e-9, 5e-9)),
            count,
            temperature: 300.0,
            distance: 20e-9,
        }
    }

    #[test]
    fn maxwell_boltzmann_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = init_probe(&region(20000), ELECTRON_MASS, &mut rng).unwrap();
        let rms = (e.iter().map(|p| p.velocity.norm_squared()).sum::<f64>() / e.len() as f64).sqrt();
        // √(3kT/m)
        assert!((rms - 1.16792e5).abs() / 1.16792e5 < 0.01, "{rms}");
        for k in 0..3 {
            let comp: Vec<f64> = e.iter().map(|p| p.velocity[k]).collect();
            let s = Summary::of(&comp).unwrap();
            assert!(s.mean.abs() < 3.0 * s.stderr());
        }
        assert!(e.iter().all(|p| region(1).bounds.contains(&p.position)));
    }

    #[test]
    fn seeded_init_is_repeatable() {
        let a = init_probe(&region(50), ELECTRON_MASS, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = init_probe(&region(50), ELECTRON_MASS, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_regions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(init_probe(&region(0), ELECTRON_MASS, &mut rng).is_err());
        let mut r = region(5);
        r.bounds.max.x = r.bounds.min.x;
        assert!(init_probe(&r, ELECTRON_MASS, &mut rng).is_err());
        assert!(ThermostatParams { friction: -1.0, temperature: 300.0 }.validate().is_err());
    }
}
