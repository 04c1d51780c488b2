use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{condition_ratio, ClosedFormState, OracleError};
use crate::constants::HBAR;

/// Uniform momentum grid for the double integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub p_min: f64,
    pub p_max: f64,
    /// Odd number of points, so that every other point forms the Richardson grid.
    pub points: usize,
    pub tolerance: f64,
}

impl QuadratureSpec {
    /// Window of ±10 momentum widths, resolving the propagation phase at `(x_s, t)` with 16 points per cycle.
    pub fn for_state(state: &ClosedFormState, t: f64, x_s: f64) -> Self {
        let (mean, spread) = state.momentum_window();
        let half = 10.0 * spread;
        let m = state.mass();
        let reach =
            state.packets.iter().map(|p| (x_s - p.center - p.velocity * t).abs()).fold(0.0, f64::max) + half * t / m;
        let dp = 2.0 * std::f64::consts::PI * HBAR / (16.0 * reach.max(1e-12));
        let points = ((2.0 * half / dp).ceil() as usize).clamp(201, 20001) | 1;
        Self { p_min: mean - half, p_max: mean + half, points, tolerance: 1e-6 }
    }

    /// Grid widths must cover eight momentum widths of the state.
    pub fn validate(&self, state: &ClosedFormState) -> Result<(), OracleError> {
        let (mean, spread) = state.momentum_window();
        if self.points < 5 || self.points % 2 == 0 {
            return Err(OracleError::InvalidQuadrature(format!("{} points; need an odd count ≥ 5", self.points)));
        }
        if self.p_min > mean - 4.0 * spread || self.p_max < mean + 4.0 * spread {
            return Err(OracleError::InvalidQuadrature("grid spans fewer than 8 momentum widths".into()));
        }
        Ok(())
    }
}

/// Joint statistics of weak momentum and strong position outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub x_s: f64,
    /// P(x_s), density per unit x_s.
    pub probability: f64,
    /// ∫p_w P(p_w ∩ x_s) dp_w.
    pub numerator: f64,
    /// E[p_w | x_s].
    pub expectation: f64,
    pub condition_ratio: f64,
    /// Relative change between the full and the half-resolution grid.
    pub error_estimate: f64,
    pub points: usize,
}

fn trapezoid_pair(amps: &[Complex64], momenta: &[f64], h: f64, kappa: f64) -> (f64, f64) {
    let n = amps.len();
    let weight: Vec<f64> = (0..n).map(|d| (-(d as f64 * h).powi(2) * kappa).exp()).collect();
    let ends = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let a: Vec<Complex64> = amps.iter().enumerate().map(|(i, a)| a * ends(i)).collect();
    let (mut prob, mut num) = (0.0, 0.0);
    for i in 0..n {
        let mut b = Complex64::default();
        let mut c = Complex64::default();
        for j in 0..n {
            let w = weight[i.abs_diff(j)];
            b += a[j] * w;
            c += a[j] * (w * momenta[j]);
        }
        let ai = a[i].conj();
        prob += (ai * b).re;
        num += 0.5 * (momenta[i] * (ai * b).re + (ai * c).re);
    }
    (prob * h * h, num * h * h)
}

/// Sequential Kraus pipeline (Gaussian momentum Kraus of width σ_w, free
/// evolution for `t_m`, Gaussian position Kraus of width σ_s centred at `x_s`)
/// evaluated as double momentum integrals.
pub fn operator_weak_value(
    state: &ClosedFormState,
    t_m: f64,
    sigma_w: f64,
    sigma_s: f64,
    x_s: f64,
    spec: &QuadratureSpec,
) -> Result<OracleValue, OracleError> {
    if !(sigma_w > 0.0 && sigma_s > 0.0) {
        return Err(OracleError::InvalidWidth { sigma_w, sigma_s });
    }
    spec.validate(state)?;
    let m = state.mass();
    let kappa = 1.0 / (4.0 * sigma_w * sigma_w) + sigma_s * sigma_s / (4.0 * HBAR * HBAR);
    let mut points = spec.points;
    loop {
        let h = (spec.p_max - spec.p_min) / (points - 1) as f64;
        let momenta: Vec<f64> = (0..points).map(|i| spec.p_min + i as f64 * h).collect();
        let prefactor = (2.0 * std::f64::consts::PI * HBAR).powf(-0.5);
        let amps: Vec<Complex64> = momenta
            .iter()
            .map(|&p| {
                let phase = -p * p * t_m / (2.0 * m * HBAR) + p * x_s / HBAR;
                state.momentum_amplitude(p) * Complex64::from_polar(prefactor, phase)
            })
            .collect();
        let (prob, num) = trapezoid_pair(&amps, &momenta, h, kappa);
        let coarse_amps: Vec<Complex64> = amps.iter().step_by(2).copied().collect();
        let coarse_p: Vec<f64> = momenta.iter().step_by(2).copied().collect();
        let (prob_c, num_c) = trapezoid_pair(&coarse_amps, &coarse_p, 2.0 * h, kappa);
        let p_scale = state.momentum_window().0.abs().max(state.momentum_window().1);
        let change = ((prob - prob_c).abs() / prob.abs().max(f64::MIN_POSITIVE))
            .max((num - num_c).abs() / (num.abs() + prob.abs() * p_scale).max(f64::MIN_POSITIVE));
        if change <= spec.tolerance {
            return Ok(OracleValue {
                x_s,
                probability: prob,
                numerator: num,
                expectation: num / prob,
                condition_ratio: condition_ratio(sigma_w, sigma_s),
                error_estimate: change,
                points,
            });
        }
        if points >= 40_001 {
            return Err(OracleError::NotConverged { change, tolerance: spec.tolerance });
        }
        points = 2 * points - 1;
    }
}
