use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::WeakValueError;
use crate::constants::{
    speed_from_energy, ELECTRON_MASS, ELEMENTARY_CHARGE, FEMTOSECOND, NANOMETER, PICOSECOND, TERAHERTZ,
};
use crate::electrostatics::{DeviceGeometry, GeometryParams};
use crate::measurement::WeakWindow;
use crate::probe::ThermostatParams;
use crate::quantum::{Boundary, GaussianPacketSpec, GridSpec, DEFAULT_ENERGY_TOLERANCE};

/// How the probes act back on the system electron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackactionMode {
    /// Conditional potential of every probe electron plus the neutralizing background.
    Full,
    /// Only the ensemble-mean potential acts, which vanishes for neutral cables;
    /// the probes still produce the pointer noise.
    MeanField,
    /// Gaussian Kraus operators applied to the freely evolved state.
    IdealOperator,
}

impl fmt::Display for BackactionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::MeanField => "mean-field",
            Self::IdealOperator => "ideal-operator",
        })
    }
}

impl FromStr for BackactionMode {
    type Err = WeakValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Self::Full),
            "mean-field" => Ok(Self::MeanField),
            "ideal-operator" => Ok(Self::IdealOperator),
            other => Err(WeakValueError::InvalidConfig(format!("unknown backaction mode '{other}'"))),
        }
    }
}

/// Electron gas of the two cables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Electrons per cable.
    pub count: usize,
    pub thermostat: ThermostatParams,
    pub softening: f64,
    pub time_step: f64,
    /// Relaxation time before t0, with the system electron held at X(0).
    pub burn_in: f64,
    /// The conditional potential is evaluated every `potential_stride` grid points and interpolated.
    pub potential_stride: usize,
    /// Cell size of the tabulated background field.
    pub background_resolution: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            count: 100,
            thermostat: ThermostatParams::default(),
            softening: 1.0 * NANOMETER,
            time_step: 0.5 * FEMTOSECOND,
            burn_in: 0.2 * PICOSECOND,
            potential_stride: 16,
            background_resolution: 0.5 * NANOMETER,
        }
    }
}

/// 2048 points at 0.4 nm around the device with 60 nm absorbing layers.
pub fn experiment_grid(device_length: f64) -> GridSpec {
    GridSpec::centered(0.5 * device_length, 0.4 * NANOMETER, 2048, Boundary::AbsorbingMask { width: 60.0 * NANOMETER })
        .expect("default grid is valid")
}

/// Everything that defines an ensemble of two-time experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub geometry: GeometryParams,
    pub packets: Vec<GaussianPacketSpec>,
    pub mass: f64,
    pub charge: f64,
    pub grid: GridSpec,
    pub time_step: f64,
    pub t0: f64,
    /// Weak measurement time; the window is [t_m − 1/f, t_m].
    pub t_m: f64,
    /// Last time at which a strong detection is accepted.
    pub end: f64,
    pub frequency: f64,
    /// Further window lengths read from the same runs (the window does not act on the dynamics).
    pub extra_frequencies: Vec<f64>,
    pub experiments: usize,
    pub seed: u64,
    pub mode: BackactionMode,
    pub probe: ProbeConfig,
    /// Strong trigger level as a fraction of the peak pulse at the reference speed.
    pub trigger_fraction: f64,
    /// Momentum Kraus width σ_w for the ideal-operator mode; calibrated from the probes when absent.
    pub weak_width: Option<f64>,
    pub energy_tolerance: f64,
    /// Spacing of stored trajectory samples.
    pub record_interval: f64,
}

impl ExperimentConfig {
    /// Two packets 50 nm apart moving towards the detection plane, observed at 0.3 ps.
    pub fn two_packet_default() -> Self {
        let geometry = GeometryParams::default();
        let packet = |center| GaussianPacketSpec::from_energy(center, 3.0 * NANOMETER, 0.0905, ELECTRON_MASS);
        Self {
            grid: experiment_grid(geometry.device_length),
            geometry,
            packets: vec![packet(60.0 * NANOMETER), packet(110.0 * NANOMETER)],
            mass: ELECTRON_MASS,
            charge: ELEMENTARY_CHARGE,
            time_step: 0.1 * FEMTOSECOND,
            t0: 0.0,
            t_m: 0.3 * PICOSECOND,
            end: 0.4 * PICOSECOND,
            frequency: 50.0 * TERAHERTZ,
            extra_frequencies: Vec::new(),
            experiments: 5000,
            seed: 20_240_601,
            mode: BackactionMode::Full,
            probe: ProbeConfig::default(),
            trigger_fraction: 0.5,
            weak_width: None,
            energy_tolerance: DEFAULT_ENERGY_TOLERANCE,
            record_interval: 10.0 * FEMTOSECOND,
        }
    }

    /// One packet in the middle of the device, weak reading at 0.1 ps.
    pub fn single_packet_default() -> Self {
        let mut c = Self::two_packet_default();
        c.packets = vec![GaussianPacketSpec::from_energy(100.0 * NANOMETER, 3.0 * NANOMETER, 0.0905, ELECTRON_MASS)];
        c.t_m = 0.1 * PICOSECOND;
        c.end = 0.15 * PICOSECOND;
        c.experiments = 2000;
        c
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let mut f = vec![self.frequency];
        f.extend(self.extra_frequencies.iter().copied().filter(|x| *x != self.frequency));
        f
    }

    /// Mean packet speed, the reference of the strong trigger.
    pub fn reference_speed(&self) -> f64 {
        let total: f64 = self.packets.iter().map(|p| p.weight * p.weight).sum();
        let v = self.packets.iter().map(|p| p.weight * p.weight * p.velocity).sum::<f64>() / total;
        if v != 0.0 {
            v
        } else {
            speed_from_energy(0.0905, self.mass)
        }
    }

    /// Hard errors first; the returned list holds non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>, WeakValueError> {
        let bad = |msg: String| Err(WeakValueError::InvalidConfig(msg));
        let geometry = DeviceGeometry::build(&self.geometry)?;
        let violations = geometry.validate();
        if let Some(v) = violations.first() {
            return Err(WeakValueError::Geometry(v.clone()));
        }
        if self.packets.is_empty() {
            return bad("at least one packet is required".into());
        }
        if !(self.mass > 0.0) || self.charge == 0.0 {
            return bad("mass must be positive and charge non-zero".into());
        }
        if !(self.t0 < self.t_m && self.t_m < self.end) {
            return bad(format!(
                "times must satisfy t0 < t_m < end, got {:e}, {:e}, {:e}",
                self.t0, self.t_m, self.end
            ));
        }
        if self.experiments == 0 {
            return bad("experiment count M must be at least 1".into());
        }
        if !(self.time_step > 0.0) {
            return bad(format!("time step {:e} s must be positive", self.time_step));
        }
        let ratio = self.probe.time_step / self.time_step;
        if !(ratio >= 1.0 - 1e-9) || (ratio - ratio.round()).abs() > 1e-6 {
            return bad(format!(
                "probe step {:e} s must be a whole multiple of the system step {:e} s",
                self.probe.time_step, self.time_step
            ));
        }
        if self.probe.count == 0 || self.probe.potential_stride == 0 {
            return bad("probe count and potential stride must be positive".into());
        }
        self.probe.thermostat.validate()?;
        if !(self.probe.burn_in >= 0.0) {
            return bad("burn-in must be non-negative".into());
        }
        if !(self.trigger_fraction > 0.0) {
            return bad("trigger fraction must be positive".into());
        }
        if let Some(w) = self.weak_width {
            if !(w > 0.0) {
                return bad(format!("weak Kraus width {w:e} must be positive"));
            }
        }
        for f in self.frequencies() {
            WeakWindow::new(f, self.t_m)?.validate(self.t0, self.probe.time_step)?;
        }
        self.grid.require_length(2.0 * self.geometry.device_length)?;

        let mut warnings = Vec::new();
        let dwell = self.geometry.device_length / self.reference_speed().abs();
        for f in self.frequencies() {
            if 1.0 / f > dwell {
                warnings.push(format!(
                    "window 1/f = {:.3e} s exceeds the dwell time {:.3e} s; the weak reading averages over the transit",
                    1.0 / f,
                    dwell
                ));
            }
        }
        if self.experiments == 1 {
            warnings.push("M = 1 gives a degenerate distribution".into());
        }
        Ok(warnings)
    }
}
