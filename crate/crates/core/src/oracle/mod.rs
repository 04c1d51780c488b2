//! Closed-form and quadrature references: free Gaussian packets, their
//! superpositions, and the Kraus-pipeline weak value as a double momentum integral.

mod weak;

pub use weak::{operator_weak_value, OracleValue, QuadratureSpec};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::HBAR;
use crate::quantum::{GaussianPacketSpec, NODE_THRESHOLD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid packet: {0}")]
    InvalidPacket(String),
    #[error("superposition is not normalizable")]
    NotNormalizable,
    #[error("density {density:e} at x = {x:e} m is below the node threshold")]
    Node { x: f64, density: f64 },
    #[error("widths must be positive (σ_w = {sigma_w:e}, σ_s = {sigma_s:e})")]
    InvalidWidth { sigma_w: f64, sigma_s: f64 },
    #[error("quadrature did not converge: relative change {change:e} above tolerance {tolerance:e}")]
    NotConverged { change: f64, tolerance: f64 },
    #[error("invalid quadrature grid: {0}")]
    InvalidQuadrature(String),
}

/// Free-particle Gaussian with |ψ|² standard deviation `sigma` at t = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormPacket {
    pub sigma: f64,
    pub center: f64,
    pub velocity: f64,
    pub mass: f64,
    pub phase: f64,
}

impl ClosedFormPacket {
    pub fn from_spec(spec: &GaussianPacketSpec, mass: f64) -> Self {
        Self { sigma: spec.sigma, center: spec.center, velocity: spec.velocity, mass, phase: spec.relative_phase }
    }

    pub fn wavenumber(&self) -> f64 {
        self.mass * self.velocity / HBAR
    }

    /// Spreading time 2mσ²/ħ.
    pub fn spreading_time(&self) -> f64 {
        2.0 * self.mass * self.sigma * self.sigma / HBAR
    }

    /// Standard deviation of |ψ(t)|².
    pub fn width_at(&self, t: f64) -> f64 {
        self.sigma * (1.0 + (t / self.spreading_time()).powi(2)).sqrt()
    }

    /// Closed-form velocity field of the single packet.
    pub fn velocity_field(&self, x: f64, t: f64) -> f64 {
        let tau = self.spreading_time();
        self.velocity + (x - self.center - self.velocity * t) * t / (tau * tau + t * t)
    }

    fn amplitude_and_log_derivative(&self, x: f64, t: f64) -> (Complex64, Complex64) {
        let k = self.wavenumber();
        let spread = Complex64::new(1.0, t / self.spreading_time());
        let d = x - self.center - self.velocity * t;
        let omega = HBAR * k * k / (2.0 * self.mass);
        let norm = (2.0 * std::f64::consts::PI * self.sigma * self.sigma).powf(-0.25);
        let exponent =
            -d * d / (4.0 * self.sigma * self.sigma * spread) + Complex64::new(0.0, k * x - omega * t + self.phase);
        let amp = norm / spread.sqrt() * exponent.exp();
        let log_deriv = -d / (2.0 * self.sigma * self.sigma * spread) + Complex64::new(0.0, k);
        (amp, log_deriv)
    }

    /// Momentum amplitude (2πħ)^{−1/2}∫ψ(x,0)e^{−ipx/ħ}dx.
    pub fn momentum_amplitude(&self, p: f64) -> Complex64 {
        let dk = self.wavenumber() - p / HBAR;
        let s2 = self.sigma * self.sigma;
        let mag = (2.0 * std::f64::consts::PI * HBAR).powf(-0.5)
            * (2.0 * std::f64::consts::PI * s2).powf(-0.25)
            * (4.0 * std::f64::consts::PI * s2).sqrt()
            * (-s2 * dk * dk).exp();
        Complex64::from_polar(mag, dk * self.center + self.phase)
    }
}

/// Exact free evolution of a normalized Gaussian packet.
pub fn free_gaussian(packet: &ClosedFormPacket, x: f64, t: f64) -> Complex64 {
    packet.amplitude_and_log_derivative(x, t).0
}

/// Normalized superposition of closed-form packets with real weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormState {
    pub packets: Vec<ClosedFormPacket>,
    pub weights: Vec<f64>,
    scale: f64,
}

impl ClosedFormState {
    pub fn new(packets: Vec<ClosedFormPacket>, weights: Vec<f64>) -> Result<Self, OracleError> {
        if packets.is_empty() || packets.len() != weights.len() {
            return Err(OracleError::NotNormalizable);
        }
        if let Some(p) = packets.iter().find(|p| !(p.sigma > 0.0) || !(p.mass > 0.0)) {
            return Err(OracleError::InvalidPacket(format!("σ = {:e}, m = {:e}", p.sigma, p.mass)));
        }
        let mut norm = 0.0;
        for (a, wa) in packets.iter().zip(&weights) {
            for (b, wb) in packets.iter().zip(&weights) {
                norm += wa * wb * overlap(a, b).re;
            }
        }
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(OracleError::NotNormalizable);
        }
        Ok(Self { packets, weights, scale: norm.sqrt().recip() })
    }

    pub fn from_specs(specs: &[GaussianPacketSpec], mass: f64) -> Result<Self, OracleError> {
        Self::new(
            specs.iter().map(|s| ClosedFormPacket::from_spec(s, mass)).collect(),
            specs.iter().map(|s| s.weight).collect(),
        )
    }

    pub fn mass(&self) -> f64 {
        self.packets[0].mass
    }

    /// (ψ, ∂ψ/∂x) at (x, t).
    pub fn amplitude_and_derivative(&self, x: f64, t: f64) -> (Complex64, Complex64) {
        let mut value = Complex64::default();
        let mut slope = Complex64::default();
        for (p, &w) in self.packets.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let (a, ld) = p.amplitude_and_log_derivative(x, t);
            value += w * a;
            slope += w * a * ld;
        }
        (value * self.scale, slope * self.scale)
    }

    pub fn amplitude(&self, x: f64, t: f64) -> Complex64 {
        self.amplitude_and_derivative(x, t).0
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        self.amplitude(x, t).norm_sqr()
    }

    /// Probability current (ħ/m) Im(ψ*∂ψ).
    pub fn current(&self, x: f64, t: f64) -> f64 {
        let (a, d) = self.amplitude_and_derivative(x, t);
        HBAR / self.mass() * (a.conj() * d).im
    }

    pub fn momentum_amplitude(&self, p: f64) -> Complex64 {
        self.packets.iter().zip(&self.weights).map(|(k, &w)| w * k.momentum_amplitude(p)).sum::<Complex64>()
            * self.scale
    }

    /// Mean momentum and momentum standard deviation of the envelope (largest packet width).
    pub fn momentum_window(&self) -> (f64, f64) {
        let m = self.mass();
        let total: f64 = self.weights.iter().map(|w| w * w).sum();
        let mean = self.packets.iter().zip(&self.weights).map(|(p, w)| w * w * m * p.velocity).sum::<f64>() / total;
        let spread =
            self.packets.iter().map(|p| HBAR / (2.0 * p.sigma) + (m * p.velocity - mean).abs()).fold(0.0, f64::max);
        (mean, spread)
    }
}

/// ⟨a|b⟩ of two t = 0 Gaussians (closed form).
fn overlap(a: &ClosedFormPacket, b: &ClosedFormPacket) -> Complex64 {
    let aa = 1.0 / (4.0 * a.sigma * a.sigma);
    let ab = 1.0 / (4.0 * b.sigma * b.sigma);
    let na = (2.0 * std::f64::consts::PI * a.sigma * a.sigma).powf(-0.25);
    let nb = (2.0 * std::f64::consts::PI * b.sigma * b.sigma).powf(-0.25);
    let big_a = aa + ab;
    let big_b = Complex64::new(2.0 * (aa * a.center + ab * b.center), b.wavenumber() - a.wavenumber());
    let big_c = aa * a.center * a.center + ab * b.center * b.center;
    let phase = Complex64::new(0.0, b.phase - a.phase);
    na * nb * (std::f64::consts::PI / big_a).sqrt() * (big_b * big_b / (4.0 * big_a) - big_c + phase).exp()
}

/// Closed-form Bohmian velocity J/|ψ|² of the superposition.
pub fn analytic_two_packet_velocity(state: &ClosedFormState, x: f64, t: f64) -> Result<f64, OracleError> {
    let (a, d) = state.amplitude_and_derivative(x, t);
    let density = a.norm_sqr();
    let peak = state
        .packets
        .iter()
        .zip(&state.weights)
        .map(|(p, w)| (w * state.scale).powi(2) / ((2.0 * std::f64::consts::PI).sqrt() * p.width_at(t)))
        .fold(0.0, f64::max);
    if !(density > NODE_THRESHOLD * peak) {
        return Err(OracleError::Node { x, density });
    }
    Ok(HBAR / state.mass() * (a.conj() * d).im / density)
}

/// σ_w σ_s / ħ.
pub fn condition_ratio(sigma_w: f64, sigma_s: f64) -> f64 {
    sigma_w * sigma_s / HBAR
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{speed_from_energy, ELECTRON_MASS, NANOMETER, PICOSECOND};
    use crate::quadrature::integrate;

    fn packet(center: f64, velocity: f64) -> ClosedFormPacket {
        ClosedFormPacket { sigma: 3.0 * NANOMETER, center, velocity, mass: ELECTRON_MASS, phase: 0.0 }
    }

    #[test]
    fn closed_form_solves_free_schrodinger() {
        let p = packet(60e-9, speed_from_energy(0.0905, ELECTRON_MASS));
        let (x, t) = (71.3e-9, 0.07 * PICOSECOND);
        let (h, dt) = (2e-12, 1e-19);
        let psi = |x: f64, t: f64| free_gaussian(&p, x, t);
        let dpsi_dt = (psi(x, t + dt) - psi(x, t - dt)) / (2.0 * dt);
        let lap = (psi(x + h, t) - 2.0 * psi(x, t) + psi(x - h, t)) / (h * h);
        let lhs = Complex64::new(0.0, HBAR) * dpsi_dt;
        let rhs = -HBAR * HBAR / (2.0 * ELECTRON_MASS) * lap;
        assert!((lhs - rhs).norm() < 1e-5 * lhs.norm(), "{lhs} vs {rhs}");
    }

    #[test]
    fn moments_follow_ehrenfest_and_spreading() {
        let p = packet(60e-9, 1.784e5);
        let t = 0.3 * PICOSECOND;
        let lo = 0.0;
        let hi = 300e-9;
        let rho = |x: f64| free_gaussian(&p, x, t).norm_sqr();
        let norm = integrate(rho, lo, hi, 1e-12, 0.0, 500).value;
        let mean = integrate(|x| x * rho(x), lo, hi, 1e-12, 0.0, 500).value;
        let var = integrate(|x| (x - mean).powi(2) * rho(x), lo, hi, 1e-12, 0.0, 500).value;
        assert!((norm - 1.0).abs() < 1e-10);
        assert!((mean - (60e-9 + 1.784e5 * t)).abs() < 1e-15);
        assert!((var.sqrt() - p.width_at(t)).abs() / p.width_at(t) < 1e-9);
    }

    #[test]
    fn velocity_field_matches_phase_gradient() {
        let p = packet(60e-9, 1.784e5);
        let state = ClosedFormState::new(vec![p, packet(110e-9, 1.784e5)], vec![1.0, 0.0]).unwrap();
        let (x, t) = (118e-9, 0.3 * PICOSECOND);
        let h = 1e-13;
        let phase = |x: f64| free_gaussian(&p, x, t).arg();
        let fd = HBAR / ELECTRON_MASS * (phase(x + h) - phase(x - h)) / (2.0 * h);
        let v = analytic_two_packet_velocity(&state, x, t).unwrap();
        assert!((v - p.velocity_field(x, t)).abs() < 1e-9 * p.velocity);
        assert!((v - fd).abs() < 1e-6 * p.velocity);
    }

    #[test]
    fn symmetric_midpoint_moves_at_v0() {
        let v0 = 1.784e5;
        let state = ClosedFormState::new(vec![packet(60e-9, v0), packet(110e-9, v0)], vec![1.0, 1.0]).unwrap();
        for t in [0.1, 0.2, 0.3] {
            let t = t * PICOSECOND;
            let mid = 85e-9 + v0 * t;
            let v = analytic_two_packet_velocity(&state, mid, t).unwrap();
            assert!((v - v0).abs() < 1e-9 * v0);
        }
    }

    #[test]
    fn superposition_is_normalized_with_overlap() {
        let state = ClosedFormState::new(vec![packet(60e-9, 1.0e5), packet(66e-9, 1.4e5)], vec![1.0, 0.7]).unwrap();
        let n = integrate(|x| state.density(x, 0.0), 0.0, 150e-9, 1e-12, 0.0, 500).value;
        assert!((n - 1.0).abs() < 1e-10);
        let pm = integrate(|p| state.momentum_amplitude(p).norm_sqr(), -2e-24, 2e-24, 1e-12, 0.0, 500).value;
        assert!((pm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn condition_ratio_is_linear() {
        assert!((condition_ratio(HBAR / 2e-9, 2e-9) - 1.0).abs() < 1e-15);
        assert!((condition_ratio(2.0 * HBAR / 2e-9, 2e-9) - 2.0).abs() < 1e-15);
    }
}
