use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::MeasurementError;
use crate::constants::HBAR;
use crate::quantum::WaveField;

/// Probabilities below this are treated as an impossible outcome.
const UNDERFLOW: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KrausBasis {
    Momentum,
    Position,
}

/// C·exp(−(b − center)²/(2σ²)) diagonal in `basis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianKraus {
    pub basis: KrausBasis,
    pub center: f64,
    pub width: f64,
    pub normalization: f64,
}

impl GaussianKraus {
    /// Operator with the completeness normalization C = (√π σ)^{−1/2}.
    pub fn new(basis: KrausBasis, center: f64, width: f64) -> Result<Self, MeasurementError> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(MeasurementError::InvalidWidth(width));
        }
        Ok(Self { basis, center, width, normalization: (std::f64::consts::PI.sqrt() * width).powf(-0.5) })
    }

    pub fn value(&self, at: f64) -> f64 {
        let d = at - self.center;
        self.normalization * (-d * d / (2.0 * self.width * self.width)).exp()
    }
}

/// Applies `kraus` to `psi`; returns the renormalized state and ‖Kψ‖².
pub fn kraus_apply(psi: &WaveField, kraus: &GaussianKraus) -> Result<(WaveField, f64), MeasurementError> {
    let mut out = psi.clone();
    match kraus.basis {
        KrausBasis::Position => {
            for (i, a) in out.amplitudes.iter_mut().enumerate() {
                *a *= kraus.value(psi.grid.x(i));
            }
        }
        KrausBasis::Momentum => {
            let n = psi.grid.n_points;
            let mut planner = FftPlanner::new();
            planner.plan_fft_forward(n).process(&mut out.amplitudes);
            let scale = 1.0 / n as f64;
            for (a, k) in out.amplitudes.iter_mut().zip(psi.grid.wavenumbers()) {
                *a *= kraus.value(HBAR * k) * scale;
            }
            planner.plan_fft_inverse(n).process(&mut out.amplitudes);
        }
    }
    let probability = out.norm_sq();
    if !(probability > UNDERFLOW) {
        return Err(MeasurementError::Underflow(probability));
    }
    let r = probability.sqrt();
    out.amplitudes.iter_mut().for_each(|a| *a /= Complex64::new(r, 0.0));
    Ok((out, probability))
}

/// Kraus operators sharing basis, width and normalization, with centres on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausFamily {
    pub basis: KrausBasis,
    pub width: f64,
    pub normalization: f64,
    pub centers: Vec<f64>,
}

impl KrausFamily {
    pub fn uniform(basis: KrausBasis, width: f64, normalization: f64, lo: f64, hi: f64, spacing: f64) -> Self {
        let n = ((hi - lo) / spacing).round() as usize;
        Self { basis, width, normalization, centers: (0..=n).map(|i| lo + i as f64 * spacing).collect() }
    }
}

/// max_b |∫ K_c(b)² dc − 1| over `basis_points`, the centre integral done by the trapezoid rule.
pub fn povm_completeness_residual(family: &KrausFamily, basis_points: &[f64]) -> f64 {
    let c = &family.centers;
    let s2 = family.width * family.width;
    let c2 = family.normalization * family.normalization;
    basis_points
        .iter()
        .map(|&b| {
            let f = |x: f64| c2 * (-(b - x).powi(2) / s2).exp();
            let integral: f64 = c.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (f(w[0]) + f(w[1]))).sum();
            (integral - 1.0).abs()
        })
        .fold(0.0, f64::max)
}
