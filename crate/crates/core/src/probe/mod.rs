//! Semiclassical electron gas in the two metallic cables: Langevin dynamics
//! with softened Coulomb forces and a uniform neutralizing background, and
//! the displacement current it induces through a cable cross-section.

mod background;
mod cable;
mod current;
mod dynamics;

pub use background::{background_line_potential, box_field, BackgroundField};
pub use cable::{init_probe, CableRegion, ProbeElectron, ThermostatParams};
pub use current::{probe_current_contribution, probe_flux};
pub use dynamics::{step_probe, ProbeCable, ProbeModel};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("invalid cable region: {0}")]
    InvalidRegion(String),
    #[error("invalid thermostat: {0}")]
    InvalidThermostat(String),
    #[error("probe time step {dt:e} s must be positive")]
    InvalidTimeStep { dt: f64 },
}
