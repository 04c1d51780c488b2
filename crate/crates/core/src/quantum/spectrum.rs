use num_complex::Complex64;
use rustfft::FftPlanner;

use super::WaveField;
use crate::constants::HBAR;

/// |a(p)|² on the momentum grid conjugate to the spatial grid, in ascending p.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumSpectrum {
    pub momenta: Vec<f64>,
    pub density: Vec<f64>,
    pub dp: f64,
}

impl MomentumSpectrum {
    pub fn total(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.dp
    }

    pub fn mean(&self) -> f64 {
        self.momenta.iter().zip(&self.density).map(|(p, d)| p * d).sum::<f64>() * self.dp
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let var = self.momenta.iter().zip(&self.density).map(|(p, d)| (p - m).powi(2) * d).sum::<f64>() * self.dp;
        var.sqrt()
    }

    pub fn peak(&self) -> f64 {
        let i = self.density.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
        self.momenta[i]
    }
}

/// Momentum amplitudes a(p) = (2πħ)^{−1/2} ∫ψ(x) e^{−ipx/ħ} dx, ascending p.
pub fn momentum_amplitudes(psi: &WaveField) -> (Vec<f64>, Vec<Complex64>) {
    let g = &psi.grid;
    let n = g.n_points;
    let mut buf = psi.amplitudes.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let k = g.wavenumbers();
    let scale = g.dx / (2.0 * std::f64::consts::PI * HBAR).sqrt();
    let mut pairs: Vec<(f64, Complex64)> =
        k.iter().zip(buf).map(|(&k, a)| (HBAR * k, a * Complex64::from_polar(scale, -k * g.x_min))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub fn momentum_spectrum(psi: &WaveField) -> MomentumSpectrum {
    let (momenta, amps) = momentum_amplitudes(psi);
    let dp = 2.0 * std::f64::consts::PI * HBAR / psi.grid.length();
    MomentumSpectrum { momenta, density: amps.iter().map(|a| a.norm_sqr()).collect(), dp }
}
