//! One-dimensional conditional wave function of the system electron.

mod grid;
mod guidance;
mod packet;
mod potential;
mod propagator;
mod sampling;
mod spectrum;
mod trajectory;
mod wave;

pub use grid::{Boundary, GridSpec};
pub use guidance::{current_density, guidance_velocity, interpolate, GuidanceView, LocalAmplitude, NODE_THRESHOLD};
pub use packet::{build_superposition, GaussianPacketSpec};
pub use potential::{conditional_potential, wavefunction_error, PotentialField};
pub use propagator::{propagate_step, SplitStepPropagator, DEFAULT_ENERGY_TOLERANCE};
pub use sampling::{sample_initial_positions, DensitySampler};
pub use spectrum::{momentum_amplitudes, momentum_spectrum, MomentumSpectrum};
pub use trajectory::{advance_trajectory, evolve_ensemble, BohmianTrajectory, EnsembleRun, GuidanceIntegrator};
pub use wave::WaveField;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid length {length:e} m is shorter than the required {required:e} m")]
    GridTooShort { length: f64, required: f64 },
    #[error("invalid packet: {0}")]
    InvalidPacket(String),
    #[error("superposition is not normalizable")]
    NotNormalizable,
    #[error("packet centred at {center:e} m with width {sigma:e} m does not fit the grid with a 5σ margin")]
    PacketOutsideGrid { center: f64, sigma: f64 },
    #[error("potential contains non-finite values")]
    NonFinitePotential,
    #[error("potential has {got} samples but the grid has {expected}")]
    PotentialMismatch { expected: usize, got: usize },
    #[error("time step {dt:e} s must be positive and finite")]
    InvalidTimeStep { dt: f64 },
    #[error("estimated splitting error {estimate:e} J per step exceeds the tolerance {tolerance:e} J")]
    EnergyTolerance { estimate: f64, tolerance: f64 },
    #[error("wave function became non-finite")]
    NonFiniteAmplitude,
    #[error("wave functions live on different grids")]
    GridMismatch,
    #[error("position {x:e} m lies outside the interpolation domain")]
    OutsideGrid { x: f64 },
    #[error("density {density:e} at x = {x:e} m is below the node threshold")]
    Node { x: f64, density: f64 },
    #[error("cannot sample zero positions")]
    EmptySample,
    #[error("trajectory left the grid at t = {time:e} s (x = {x:e} m)")]
    Escaped { x: f64, time: f64 },
}
