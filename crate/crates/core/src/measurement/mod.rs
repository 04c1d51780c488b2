//! Pointer readings of the weak ammeter, their distribution and Gaussian fit,
//! the response kernel, Gaussian Kraus operators and strong position detection.

mod distribution;
mod kernel;
mod kraus;
mod strong;
mod weak;

pub use distribution::{
    build_distribution, fit_gaussian_sigma, Binning, GaussianFit, PointerDistribution, BIMODALITY_LIMIT,
};
pub use kernel::{extract_kernel, ResponseKernel, MIN_KERNEL_RATIO};
pub use kraus::{kraus_apply, povm_completeness_residual, GaussianKraus, KrausBasis, KrausFamily};
pub use strong::{detect_strong_position, DetectionTrigger, StrongOutcome, TrajectorySample};
pub use weak::{measure_weak_current, windowed_means, CurrentSample, InducedCharge, WeakWindow};

use thiserror::Error;

use crate::quantum::QuantumError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("measurement window [{start:e}, {end:e}] s starts before t0 = {t0:e} s")]
    WindowBeforeStart { start: f64, end: f64, t0: f64 },
    #[error("window length {window:e} s is shorter than one step of {dt:e} s")]
    WindowTooShort { window: f64, dt: f64 },
    #[error("frequency {0:e} Hz must be positive")]
    InvalidFrequency(f64),
    #[error("no samples")]
    Empty,
    #[error("degenerate bin width {0:e}")]
    DegenerateBinWidth(f64),
    #[error("distribution is not single-peaked (bimodality coefficient {0:.3})")]
    Multimodal(f64),
    #[error("pointer support only {ratio:.2}× the system current spread (need ≥ {required})")]
    KernelNotExtractable { ratio: f64, required: f64 },
    #[error("Kraus width {0:e} must be positive")]
    InvalidWidth(f64),
    #[error("outcome probability {0:e} underflows")]
    Underflow(f64),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}
