//! Two-time experiments: weak current at t_m, strong position afterwards, and the
//! conditional averages that turn them into a velocity field.

mod bundle;
mod config;
mod experiment;
mod field;
mod sweep;

pub use bundle::{reconstruct_trajectories, TrajectoryBundle};
pub use config::{experiment_grid, BackactionMode, ExperimentConfig, ProbeConfig};
pub use experiment::{
    calibrate_weak_width, run_ensemble, run_single_experiment, DiscardReason, ExperimentContext, ExperimentRecord,
    WeakCalibration,
};
pub use field::{
    conditional_expectation, interference_alternations, position_momentum_scale, reference_velocity, velocity_field,
    weak_mean, FieldBin, VelocityField, WeakMean, MIN_CONDITION_RATIO,
};
pub use sweep::{distance_sweep, frequency_sweep, DistancePoint, FrequencyPoint};

use thiserror::Error;

use crate::electrostatics::{ElectrostaticsError, GeometryViolation};
use crate::measurement::MeasurementError;
use crate::oracle::OracleError;
use crate::probe::ProbeError;
use crate::quantum::QuantumError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeakValueError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("geometry rule '{}' violated: {}", .0.rule, .0.detail)]
    Geometry(GeometryViolation),
    #[error("no record has a strong outcome; nothing to postselect")]
    EmptyPostselection,
    #[error("no usable records")]
    NoRecords,
    #[error(transparent)]
    Electrostatics(#[from] ElectrostaticsError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
