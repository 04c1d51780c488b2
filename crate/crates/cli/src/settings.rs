//! Flat key-value run configuration with the unit in every key name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use weakcurrent_core::constants::{
    ELECTRON_MASS, ELECTRON_VOLT, ELEMENTARY_CHARGE, FEMTOSECOND, HBAR, NANOMETER, PICOSECOND, TERAHERTZ,
};
use weakcurrent_core::electrostatics::GeometryParams;
use weakcurrent_core::probe::ThermostatParams;
use weakcurrent_core::quantum::{Boundary, GaussianPacketSpec, GridSpec};
use weakcurrent_core::weak_value::{BackactionMode, ExperimentConfig, ProbeConfig};

use crate::CliError;

macro_rules! settings {
    ($($(#[$doc:meta])* $field:ident as $key:literal : $ty:ty = $default:expr;)*) => {
        /// Every key is optional in the file; missing ones are filled from the profile defaults.
        #[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct Settings {
            $(
                $(#[$doc])*
                #[serde(rename = $key, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl Settings {
            fn base_defaults() -> Self {
                Self { $($field: $default,)* }
            }

            /// Fills missing keys from `defaults`; returns the names of the filled keys.
            fn fill_from(&mut self, defaults: Settings) -> Vec<String> {
                let mut filled = Vec::new();
                $(
                    if self.$field.is_none() && defaults.$field.is_some() {
                        self.$field = defaults.$field;
                        filled.push($key.to_string());
                    }
                )*
                filled
            }
        }
    };
}

settings! {
    /// "two-packet" or "single-packet".
    profile as "profile": String = Some("two-packet".into());
    device_length_nm as "device_length_nm": f64 = Some(280.0);
    relative_permittivity as "relative_permittivity": f64 = Some(1.0);
    weak_area_m2 as "weak_area_m2": f64 = Some(1e-11);
    tile_count as "tile_count": usize = Some(56);
    tile_width_nm as "tile_width_nm": f64 = Some(5.0);
    cable_width_nm as "cable_width_nm": f64 = Some(10.0);
    cable_length_nm as "cable_length_nm": f64 = Some(40.0);
    cable_distance_nm as "cable_distance_nm": f64 = Some(13.0);
    packet_centers_nm as "packet_centers_nm": Vec<f64> = Some(vec![60.0, 110.0]);
    packet_sigma_nm as "packet_sigma_nm": f64 = Some(3.0);
    packet_energy_ev as "packet_energy_eV": f64 = Some(0.0905);
    /// Amplitude weights, one per centre; equal when absent.
    packet_weights as "packet_weights": Vec<f64> = None;
    mass_me as "mass_me": f64 = Some(1.0);
    charge_e as "charge_e": f64 = Some(1.0);
    grid_points as "grid_points": usize = Some(2048);
    grid_spacing_nm as "grid_spacing_nm": f64 = Some(0.4);
    absorbing_width_nm as "absorbing_width_nm": f64 = Some(60.0);
    time_step_fs as "time_step_fs": f64 = Some(0.1);
    t0_ps as "t0_ps": f64 = Some(0.0);
    t_m_ps as "t_m_ps": f64 = Some(0.3);
    end_ps as "end_ps": f64 = Some(0.4);
    frequency_thz as "frequency_THz": f64 = Some(50.0);
    extra_frequencies_thz as "extra_frequencies_THz": Vec<f64> = Some(Vec::new());
    experiments as "experiments": usize = Some(5000);
    seed as "seed": u64 = Some(20_240_601);
    mode as "mode": String = Some("full".into());
    probe_count as "probe_count": usize = Some(100);
    probe_time_step_fs as "probe_time_step_fs": f64 = Some(0.5);
    probe_softening_nm as "probe_softening_nm": f64 = Some(1.0);
    probe_burn_in_ps as "probe_burn_in_ps": f64 = Some(0.2);
    potential_stride as "potential_stride": usize = Some(16);
    background_resolution_nm as "background_resolution_nm": f64 = Some(0.5);
    thermostat_temperature_k as "thermostat_temperature_K": f64 = Some(300.0);
    thermostat_friction_per_ps as "thermostat_friction_per_ps": f64 = Some(10.0);
    trigger_fraction as "trigger_fraction": f64 = Some(0.5);
    /// Momentum Kraus width of the ideal-operator mode in ħ/nm; calibrated from the probes when absent.
    weak_width_hbar_per_nm as "weak_width_hbar_per_nm": f64 = None;
    energy_tolerance_ev as "energy_tolerance_eV": f64 = Some(1e-5);
    record_interval_fs as "record_interval_fs": f64 = Some(10.0);
    sweep_frequencies_thz as "sweep_frequencies_THz": Vec<f64> = Some(vec![500.0, 50.0]);
    sweep_distances_nm as "sweep_distances_nm": Vec<f64> = Some(vec![6.5, 13.0, 26.0, 52.0]);
    sweep_runs as "sweep_runs": usize = Some(24);
    /// Averaging interval of the classicality check.
    validate_interval_fs as "validate_interval_fs": f64 = Some(20.0);
    /// Replaces the simulated mean flux through the weak surface.
    validate_flux_vm as "validate_flux_Vm": f64 = None;
    /// Replaces the weak surface area in the classicality check.
    validate_area_m2 as "validate_area_m2": f64 = None;
    calibration_windows as "calibration_windows": usize = Some(400);
    oracle_points as "oracle_points": usize = Some(20);
    oracle_condition_ratio as "oracle_condition_ratio": f64 = Some(100.0);
    oracle_strong_width_nm as "oracle_strong_width_nm": f64 = Some(0.2);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    TwoPacket,
    SinglePacket,
}

impl Profile {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "two-packet" => Ok(Self::TwoPacket),
            "single-packet" => Ok(Self::SinglePacket),
            other => Err(CliError::Config(format!("unknown profile '{other}' (two-packet or single-packet)"))),
        }
    }
}

impl Settings {
    pub fn defaults(profile: Profile) -> Self {
        let mut s = Self::base_defaults();
        if profile == Profile::SinglePacket {
            s.profile = Some("single-packet".into());
            s.packet_centers_nm = Some(vec![100.0]);
            s.t_m_ps = Some(0.1);
            s.end_ps = Some(0.15);
            s.experiments = Some(2000);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fills every missing key and returns the filled key names.
    pub fn resolve(&mut self) -> Result<Vec<String>, CliError> {
        let profile = Profile::parse(self.profile.as_deref().unwrap_or("two-packet"))?;
        Ok(self.fill_from(Self::defaults(profile)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialize")
    }

    /// Core configuration of a resolved settings set, validated.
    pub fn experiment(&self) -> Result<(ExperimentConfig, Vec<String>), CliError> {
        let get = |v: Option<f64>, key: &str| v.ok_or_else(|| CliError::Config(format!("missing key '{key}'")));
        let mass = get(self.mass_me, "mass_me")? * ELECTRON_MASS;
        let centers = self.packet_centers_nm.clone().unwrap_or_default();
        let weights = self.packet_weights.clone().unwrap_or_else(|| vec![1.0; centers.len()]);
        if weights.len() != centers.len() {
            return Err(CliError::Config(format!(
                "packet_weights has {} entries for {} packet centres",
                weights.len(),
                centers.len()
            )));
        }
        let sigma = get(self.packet_sigma_nm, "packet_sigma_nm")? * NANOMETER;
        let energy = get(self.packet_energy_ev, "packet_energy_eV")?;
        if !(energy >= 0.0) {
            return Err(CliError::Config(format!("packet_energy_eV = {energy} must be non-negative")));
        }
        let packets = centers
            .iter()
            .zip(&weights)
            .map(|(c, w)| GaussianPacketSpec {
                weight: *w,
                ..GaussianPacketSpec::from_energy(c * NANOMETER, sigma, energy, mass)
            })
            .collect();
        let device_length = get(self.device_length_nm, "device_length_nm")? * NANOMETER;
        let geometry = GeometryParams {
            device_length,
            relative_permittivity: get(self.relative_permittivity, "relative_permittivity")?,
            weak_area: get(self.weak_area_m2, "weak_area_m2")?,
            tile_count: self.tile_count.unwrap_or(0),
            tile_width: get(self.tile_width_nm, "tile_width_nm")? * NANOMETER,
            cable_width: get(self.cable_width_nm, "cable_width_nm")? * NANOMETER,
            cable_length: get(self.cable_length_nm, "cable_length_nm")? * NANOMETER,
            cable_distance: get(self.cable_distance_nm, "cable_distance_nm")? * NANOMETER,
        };
        let grid = GridSpec::centered(
            0.5 * device_length,
            get(self.grid_spacing_nm, "grid_spacing_nm")? * NANOMETER,
            self.grid_points.unwrap_or(0),
            Boundary::AbsorbingMask { width: get(self.absorbing_width_nm, "absorbing_width_nm")? * NANOMETER },
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        let mode: BackactionMode = self
            .mode
            .as_deref()
            .unwrap_or("full")
            .parse()
            .map_err(|e: weakcurrent_core::weak_value::WeakValueError| CliError::Config(e.to_string()))?;
        let config = ExperimentConfig {
            geometry,
            packets,
            mass,
            charge: get(self.charge_e, "charge_e")? * ELEMENTARY_CHARGE,
            grid,
            time_step: get(self.time_step_fs, "time_step_fs")? * FEMTOSECOND,
            t0: get(self.t0_ps, "t0_ps")? * PICOSECOND,
            t_m: get(self.t_m_ps, "t_m_ps")? * PICOSECOND,
            end: get(self.end_ps, "end_ps")? * PICOSECOND,
            frequency: get(self.frequency_thz, "frequency_THz")? * TERAHERTZ,
            extra_frequencies: self
                .extra_frequencies_thz
                .clone()
                .unwrap_or_default()
                .iter()
                .map(|f| f * TERAHERTZ)
                .collect(),
            experiments: self.experiments.unwrap_or(0),
            seed: self.seed.unwrap_or(0),
            mode,
            probe: ProbeConfig {
                count: self.probe_count.unwrap_or(0),
                thermostat: ThermostatParams {
                    friction: get(self.thermostat_friction_per_ps, "thermostat_friction_per_ps")? / PICOSECOND,
                    temperature: get(self.thermostat_temperature_k, "thermostat_temperature_K")?,
                },
                softening: get(self.probe_softening_nm, "probe_softening_nm")? * NANOMETER,
                time_step: get(self.probe_time_step_fs, "probe_time_step_fs")? * FEMTOSECOND,
                burn_in: get(self.probe_burn_in_ps, "probe_burn_in_ps")? * PICOSECOND,
                potential_stride: self.potential_stride.unwrap_or(0),
                background_resolution: get(self.background_resolution_nm, "background_resolution_nm")? * NANOMETER,
            },
            trigger_fraction: get(self.trigger_fraction, "trigger_fraction")?,
            weak_width: self.weak_width_hbar_per_nm.map(|w| w * HBAR / NANOMETER),
            energy_tolerance: get(self.energy_tolerance_ev, "energy_tolerance_eV")? * ELECTRON_VOLT,
            record_interval: get(self.record_interval_fs, "record_interval_fs")? * FEMTOSECOND,
        };
        let warnings = config.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok((config, warnings))
    }
}
