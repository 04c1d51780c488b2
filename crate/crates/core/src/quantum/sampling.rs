use rand::Rng;

use super::{QuantumError, WaveField};

/// Inverse-CDF sampler of |ψ|² with piecewise-constant cells centred on the nodes.
#[derive(Clone, Debug)]
pub struct DensitySampler {
    x_min: f64,
    dx: f64,
    cumulative: Vec<f64>,
}

impl DensitySampler {
    pub fn new(psi: &WaveField) -> Result<Self, QuantumError> {
        let mut cumulative = Vec::with_capacity(psi.grid.n_points + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for a in &psi.amplitudes {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(QuantumError::NotNormalizable);
        }
        cumulative.iter_mut().for_each(|c| *c /= acc);
        Ok(Self { x_min: psi.grid.x_min - 0.5 * psi.grid.dx, dx: psi.grid.dx, cumulative })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let cell = self.cumulative.partition_point(|&c| c <= u).clamp(1, self.cumulative.len() - 1) - 1;
        let (lo, hi) = (self.cumulative[cell], self.cumulative[cell + 1]);
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
        self.x_min + (cell as f64 + frac) * self.dx
    }

    /// CDF of the sampled (piecewise-constant) density.
    pub fn cdf(&self, x: f64) -> f64 {
        let s = (x - self.x_min) / self.dx;
        if s <= 0.0 {
            return 0.0;
        }
        let cell = s.floor() as usize;
        if cell + 1 >= self.cumulative.len() {
            return 1.0;
        }
        let frac = s - cell as f64;
        self.cumulative[cell] * (1.0 - frac) + self.cumulative[cell + 1] * frac
    }
}

/// `count` positions distributed as |ψ0|².
pub fn sample_initial_positions<R: Rng + ?Sized>(
    psi: &WaveField,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>, QuantumError> {
    if count == 0 {
        return Err(QuantumError::EmptySample);
    }
    let sampler = DensitySampler::new(psi)?;
    Ok((0..count).map(|_| sampler.sample(rng)).collect())
}
