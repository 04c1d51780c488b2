use serde::{Deserialize, Serialize};

use super::MeasurementError;

/// Averaging window [end − 1/f, end] of the weak ammeter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakWindow {
    pub frequency: f64,
    pub end: f64,
}

impl WeakWindow {
    pub fn new(frequency: f64, end: f64) -> Result<Self, MeasurementError> {
        if !(frequency > 0.0) || !frequency.is_finite() {
            return Err(MeasurementError::InvalidFrequency(frequency));
        }
        Ok(Self { frequency, end })
    }

    pub fn length(&self) -> f64 {
        1.0 / self.frequency
    }

    pub fn start(&self) -> f64 {
        self.end - self.length()
    }

    pub fn validate(&self, t0: f64, dt: f64) -> Result<(), MeasurementError> {
        if self.length() < dt * (1.0 - 1e-9) {
            return Err(MeasurementError::WindowTooShort { window: self.length(), dt });
        }
        if self.start() < t0 - 1e-9 * dt {
            return Err(MeasurementError::WindowBeforeStart { start: self.start(), end: self.end, t0 });
        }
        Ok(())
    }
}

/// Charge induced on the weak electrode at one instant, split by origin.
///
/// Its time derivative is the Ramo–Shockley current, so the window average of
/// the current is the difference of two snapshots divided by the window length.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct InducedCharge {
    pub time: f64,
    /// q·X/L_x of the system electron (C).
    pub system: f64,
    /// Σ_k ε Φ_k of the probe electrons through their cable sections (C).
    pub probes: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentSample {
    /// Pointer value Ĩ (A).
    pub value: f64,
    pub window_start: f64,
    pub window_end: f64,
    pub surface_id: usize,
    /// Contribution of the system electron (A).
    pub system: f64,
    /// Contribution of the probe electrons (A).
    pub probes: f64,
}

/// Window-averaged weak current from the induced charge at both window edges.
pub fn measure_weak_current(
    start: &InducedCharge,
    end: &InducedCharge,
    surface_id: usize,
) -> Result<CurrentSample, MeasurementError> {
    let length = end.time - start.time;
    if !(length > 0.0) {
        return Err(MeasurementError::WindowTooShort { window: length, dt: 0.0 });
    }
    let system = (end.system - start.system) / length;
    let probes = (end.probes - start.probes) / length;
    Ok(CurrentSample {
        value: system + probes,
        window_start: start.time,
        window_end: end.time,
        surface_id,
        system,
        probes,
    })
}

/// Means of consecutive non-overlapping blocks of `per_window` samples.
pub fn windowed_means(trace: &[f64], per_window: usize) -> Vec<f64> {
    if per_window == 0 {
        return Vec::new();
    }
    trace.chunks_exact(per_window).map(|c| c.iter().sum::<f64>() / per_window as f64).collect()
}
