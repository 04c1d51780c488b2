use std::io::{self, Write};

use num_complex::Complex64;

use super::{GridSpec, QuantumError};

/// Sampled conditional wave function.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    pub grid: GridSpec,
    pub amplitudes: Vec<Complex64>,
    pub mass: f64,
    pub charge: f64,
    pub time: f64,
}

impl WaveField {
    pub fn new(
        grid: GridSpec,
        amplitudes: Vec<Complex64>,
        mass: f64,
        charge: f64,
        time: f64,
    ) -> Result<Self, QuantumError> {
        if amplitudes.len() != grid.n_points {
            return Err(QuantumError::InvalidGrid(format!(
                "{} amplitudes for {} grid points",
                amplitudes.len(),
                grid.n_points
            )));
        }
        Ok(Self { grid, amplitudes, mass, charge, time })
    }

    /// Σ|ψ_i|² dx.
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    pub fn normalize(&mut self) -> Result<(), QuantumError> {
        let n = self.norm_sq();
        if !(n > 0.0 && n.is_finite()) {
            return Err(QuantumError::NotNormalizable);
        }
        let s = 1.0 / n.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn max_density(&self) -> f64 {
        let mut lanes = [0.0f64; 4];
        let chunks = self.amplitudes.chunks_exact(4);
        let tail = chunks.remainder();
        for c in chunks {
            for (m, a) in lanes.iter_mut().zip(c) {
                let d = a.norm_sqr();
                if d > *m {
                    *m = d;
                }
            }
        }
        tail.iter().map(|a| a.norm_sqr()).chain(lanes).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        // any NaN or infinity poisons the sum
        let mut lanes = [0.0f64; 4];
        let chunks = self.amplitudes.chunks_exact(2);
        let tail = chunks.remainder();
        for c in chunks {
            lanes[0] += c[0].re;
            lanes[1] += c[0].im;
            lanes[2] += c[1].re;
            lanes[3] += c[1].im;
        }
        let sum: f64 = lanes.iter().sum::<f64>() + tail.iter().map(|a| a.re + a.im).sum::<f64>();
        sum.is_finite() || self.amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn mean_position(&self) -> f64 {
        let dx = self.grid.dx;
        self.amplitudes.iter().enumerate().map(|(i, a)| a.norm_sqr() * self.grid.x(i)).sum::<f64>() * dx
    }

    /// ⟨p⟩ from the momentum-space density.
    pub fn mean_momentum(&self) -> f64 {
        super::momentum_spectrum(self).mean()
    }

    pub fn position_std(&self) -> f64 {
        let mean = self.mean_position();
        let var = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * (self.grid.x(i) - mean).powi(2))
            .sum::<f64>()
            * self.grid.dx;
        var.sqrt()
    }

    /// Inner product ⟨self|other⟩ on the shared grid.
    pub fn overlap(&self, other: &WaveField) -> Result<Complex64, QuantumError> {
        if self.grid != other.grid {
            return Err(QuantumError::GridMismatch);
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.grid.dx)
    }

    /// Local minima of |ψ|² inside `[lo, hi]` that are deeper than `contrast` relative to the peak.
    pub fn density_minima(&self, lo: f64, hi: f64, contrast: f64) -> Vec<f64> {
        let rho = self.density();
        let peak = self.max_density();
        (1..rho.len() - 1)
            .filter(|&i| {
                let x = self.grid.x(i);
                x >= lo && x <= hi && rho[i] < rho[i - 1] && rho[i] <= rho[i + 1] && rho[i] < (1.0 - contrast) * peak
            })
            .map(|i| self.grid.x(i))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x_m,re_psi,im_psi,density")?;
        for (i, a) in self.amplitudes.iter().enumerate() {
            writeln!(out, "{:e},{:e},{:e},{:e}", self.grid.x(i), a.re, a.im, a.norm_sqr())?;
        }
        Ok(())
    }
}
