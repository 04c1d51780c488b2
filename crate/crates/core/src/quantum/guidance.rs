use num_complex::Complex64;

use super::{QuantumError, WaveField};
use crate::constants::HBAR;

/// Relative density below which a point counts as a node.
pub const NODE_THRESHOLD: f64 = 1e-12;

const STENCIL: usize = 6;

/// ψ and ∂ψ/∂x at an off-grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalAmplitude {
    pub value: Complex64,
    pub derivative: Complex64,
}

impl LocalAmplitude {
    pub fn density(&self) -> f64 {
        self.value.norm_sqr()
    }

    /// (ħ/m) Im(ψ* ∂ψ).
    pub fn current(&self, mass: f64) -> f64 {
        HBAR / mass * (self.value.conj() * self.derivative).im
    }
}

fn lagrange_weights(s: f64) -> ([f64; STENCIL], [f64; STENCIL]) {
    let mut value = [0.0; STENCIL];
    let mut slope = [0.0; STENCIL];
    for j in 0..STENCIL {
        let mut denom = 1.0;
        let mut prod = 1.0;
        for m in 0..STENCIL {
            if m != j {
                denom *= (j as f64) - (m as f64);
                prod *= s - m as f64;
            }
        }
        let mut dsum = 0.0;
        for l in 0..STENCIL {
            if l == j {
                continue;
            }
            let mut p = 1.0;
            for m in 0..STENCIL {
                if m != j && m != l {
                    p *= s - m as f64;
                }
            }
            dsum += p;
        }
        value[j] = prod / denom;
        slope[j] = dsum / denom;
    }
    (value, slope)
}

/// Interpolates ψ and ∂ψ/∂x at `x`.
///
/// The stencil values are demodulated by the local carrier `e^{ik_c x}`, with
/// k_c the phase step between the bracketing nodes, so that the polynomial
/// only has to follow the slowly varying envelope.
pub fn interpolate(psi: &WaveField, x: f64) -> Result<LocalAmplitude, QuantumError> {
    let g = &psi.grid;
    let s = (x - g.x_min) / g.dx;
    if !s.is_finite() || s < (STENCIL / 2 - 1) as f64 || s >= (g.n_points - STENCIL / 2) as f64 {
        return Err(QuantumError::OutsideGrid { x });
    }
    let i0 = s.floor() as usize;
    let first = i0 + 1 - STENCIL / 2;
    let amps = &psi.amplitudes[first..first + STENCIL];
    let (left, right) = (amps[STENCIL / 2 - 1], amps[STENCIL / 2]);
    let carrier =
        if left.norm_sqr() > 0.0 && right.norm_sqr() > 0.0 { (right * left.conj()).arg() / g.dx } else { 0.0 };
    let local = s - first as f64;
    let (wv, wd) = lagrange_weights(local);
    let step = Complex64::from_polar(1.0, -carrier * g.dx);
    let mut rot = Complex64::from_polar(1.0, carrier * g.dx * local);
    let mut value = Complex64::default();
    let mut slope = Complex64::default();
    for j in 0..STENCIL {
        let f = amps[j] * rot;
        value += f * wv[j];
        slope += f * wd[j];
        rot *= step;
    }
    Ok(LocalAmplitude { value, derivative: slope / g.dx + Complex64::new(0.0, carrier) * value })
}

/// Probability current J(x) = (ħ/m) Im(ψ* ∂ψ).
pub fn current_density(psi: &WaveField, x: f64) -> Result<f64, QuantumError> {
    Ok(interpolate(psi, x)?.current(psi.mass))
}

/// Bohmian velocity J/|ψ|², signalling nodes.
pub fn guidance_velocity(psi: &WaveField, x: f64) -> Result<f64, QuantumError> {
    GuidanceView::new(psi).velocity(x)
}

/// Borrowed wave function with its cached peak density, for repeated queries.
#[derive(Clone, Copy, Debug)]
pub struct GuidanceView<'a> {
    psi: &'a WaveField,
    max_density: f64,
}

impl<'a> GuidanceView<'a> {
    pub fn new(psi: &'a WaveField) -> Self {
        Self { psi, max_density: psi.max_density() }
    }

    /// View with a peak density already known to the caller.
    pub fn with_max_density(psi: &'a WaveField, max_density: f64) -> Self {
        Self { psi, max_density }
    }

    pub fn wave(&self) -> &'a WaveField {
        self.psi
    }

    pub fn velocity(&self, x: f64) -> Result<f64, QuantumError> {
        let local = interpolate(self.psi, x)?;
        let density = local.density();
        if !(density > NODE_THRESHOLD * self.max_density) {
            return Err(QuantumError::Node { x, density });
        }
        Ok(local.current(self.psi.mass) / density)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE, NANOMETER};
    use crate::quantum::{build_superposition, Boundary, GaussianPacketSpec, GridSpec};
    use proptest::prelude::*;

    fn grid() -> GridSpec {
        GridSpec::for_device(280.0 * NANOMETER)
    }

    #[test]
    fn weights_reproduce_polynomials() {
        let (v, d) = lagrange_weights(2.37);
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) - 0.01 * x.powi(5);
        let df = |x: f64| -2.0 + 1.5 * x * x - 0.05 * x.powi(4);
        let iv: f64 = (0..6).map(|j| v[j] * f(j as f64)).sum();
        let id: f64 = (0..6).map(|j| d[j] * f(j as f64)).sum();
        assert!((iv - f(2.37)).abs() < 1e-12);
        assert!((id - df(2.37)).abs() < 1e-12);
    }

    #[test]
    fn real_state_has_zero_velocity() {
        let p =
            GaussianPacketSpec { velocity: 0.0, ..GaussianPacketSpec::from_energy(100e-9, 3e-9, 0.0, ELECTRON_MASS) };
        let psi = build_superposition(&[p], &grid(), ELECTRON_MASS, ELEMENTARY_CHARGE).unwrap();
        for x in [95e-9, 99.93e-9, 100e-9, 104.1e-9] {
            assert_eq!(guidance_velocity(&psi, x).unwrap(), 0.0);
            assert_eq!(current_density(&psi, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn boosted_packet_moves_at_carrier_velocity() {
        let p = GaussianPacketSpec::from_energy(100e-9, 3e-9, 0.0905, ELECTRON_MASS);
        let psi = build_superposition(&[p], &grid(), ELECTRON_MASS, ELEMENTARY_CHARGE).unwrap();
        let expected = HBAR * p.wavenumber(ELECTRON_MASS) / ELECTRON_MASS;
        let v = guidance_velocity(&psi, 100e-9).unwrap();
        assert!((v - expected).abs() < 1e-9 * expected, "{v} vs {expected}");
        let off = guidance_velocity(&psi, 101.37e-9).unwrap();
        assert!((off - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn node_and_boundary_are_signalled() {
        let p = GaussianPacketSpec::from_energy(100e-9, 3e-9, 0.0905, ELECTRON_MASS);
        let psi = build_superposition(&[p], &grid(), ELECTRON_MASS, ELEMENTARY_CHARGE).unwrap();
        assert!(matches!(guidance_velocity(&psi, 200e-9), Err(QuantumError::Node { .. })));
        assert!(matches!(guidance_velocity(&psi, 1.0), Err(QuantumError::OutsideGrid { .. })));
        assert!(current_density(&psi, 200e-9).is_ok());
    }

    proptest! {
        #[test]
        fn current_is_density_times_velocity(
            re in proptest::collection::vec(-1.0f64..1.0, 64),
            im in proptest::collection::vec(-1.0f64..1.0, 64),
            s in 3.0f64..60.0,
        ) {
            let g = GridSpec::new(0.0, 1e-10, 64, Boundary::PeriodicPadded).unwrap();
            let amps = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            let mut psi = WaveField::new(g, amps, ELECTRON_MASS, ELEMENTARY_CHARGE, 0.0).unwrap();
            psi.normalize().unwrap();
            let x = s * 1e-10;
            let local = interpolate(&psi, x).unwrap();
            if let Ok(v) = guidance_velocity(&psi, x) {
                let j = current_density(&psi, x).unwrap();
                prop_assert!((j - local.density() * v).abs() <= 1e-12 * j.abs().max(1e-300) + 1e-300);
            }
        }
    }
}
