use serde::{Deserialize, Serialize};

use super::QuantumError;
use crate::constants::NANOMETER;

/// Treatment of the grid edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Boundary {
    /// Plain periodic domain; the padding keeps the wave away from the seam.
    PeriodicPadded,
    /// Smooth absorbing layer of the given width (m) at both ends.
    AbsorbingMask { width: f64 },
}

/// Uniform 1D grid `x_i = x_min + i·dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub dx: f64,
    pub n_points: usize,
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn new(x_min: f64, dx: f64, n_points: usize, boundary: Boundary) -> Result<Self, QuantumError> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(QuantumError::InvalidGrid(format!("dx = {dx:e} must be positive")));
        }
        if n_points < 16 {
            return Err(QuantumError::InvalidGrid(format!("{n_points} points, need at least 16")));
        }
        if !x_min.is_finite() {
            return Err(QuantumError::InvalidGrid("x_min is not finite".into()));
        }
        if let Boundary::AbsorbingMask { width } = boundary {
            let length = dx * n_points as f64;
            if !(width >= 0.0 && 2.0 * width < length) {
                return Err(QuantumError::InvalidGrid(format!(
                    "absorbing width {width:e} m does not fit a {length:e} m grid"
                )));
            }
        }
        Ok(Self { x_min, dx, n_points, boundary })
    }

    /// Grid of `n_points` spacing `dx` centred on `center`.
    pub fn centered(center: f64, dx: f64, n_points: usize, boundary: Boundary) -> Result<Self, QuantumError> {
        Self::new(center - 0.5 * dx * (n_points - 1) as f64, dx, n_points, boundary)
    }

    /// 4096 points at 0.2 nm around the device with 60 nm absorbing layers.
    pub fn for_device(device_length: f64) -> Self {
        Self::centered(0.5 * device_length, 0.2 * NANOMETER, 4096, Boundary::AbsorbingMask { width: 60.0 * NANOMETER })
            .expect("default grid is valid")
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n_points - 1)
    }

    /// Periodic length `n·dx`.
    pub fn length(&self) -> f64 {
        self.n_points as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * std::f64::consts::PI / self.length();
        (0..n).map(|i| if i < n.div_ceil(2) { i as f64 } else { i as f64 - n as f64 } * dk).collect()
    }

    pub fn require_length(&self, required: f64) -> Result<(), QuantumError> {
        if self.length() < required {
            return Err(QuantumError::GridTooShort { length: self.length(), required });
        }
        Ok(())
    }

    /// Region free of the absorbing layers.
    pub fn interior(&self) -> (f64, f64) {
        match self.boundary {
            Boundary::PeriodicPadded => (self.x_min, self.x_max()),
            Boundary::AbsorbingMask { width } => (self.x_min + width, self.x_max() - width),
        }
    }

    /// Per-point mask factors, `None` for periodic grids.
    pub(crate) fn mask(&self) -> Option<Vec<f64>> {
        let Boundary::AbsorbingMask { width } = self.boundary else {
            return None;
        };
        if width == 0.0 {
            return None;
        }
        let (lo, hi) = self.interior();
        Some(
            (0..self.n_points)
                .map(|i| {
                    let x = self.x(i);
                    let depth = if x < lo {
                        (lo - x) / width
                    } else if x > hi {
                        (x - hi) / width
                    } else {
                        return 1.0;
                    };
                    (0.5 * std::f64::consts::PI * depth.min(1.0)).cos().max(0.0).powf(0.125)
                })
                .collect(),
        )
    }

    /// Index of the grid point at or left of `x`, if inside.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let s = (x - self.x_min) / self.dx;
        (s >= 0.0 && s <= (self.n_points - 1) as f64).then(|| (s.floor() as usize).min(self.n_points - 2))
    }
}
