use rayon::prelude::*;
use serde::Serialize;

use super::{run_ensemble, BackactionMode, ExperimentConfig, ExperimentContext, WeakValueError};
use crate::measurement::{build_distribution, fit_gaussian_sigma, Binning, GaussianFit};
use crate::quantum::wavefunction_error;
use crate::stats::Summary;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrequencyPoint {
    pub frequency: f64,
    pub fit: GaussianFit,
}

/// Fitted pointer width per measurement frequency.
///
/// The window only reads the induced charge, so ensembles with the same seeds
/// differ between frequencies only in the window; one ensemble is run and every
/// window is read from it.
pub fn frequency_sweep(config: &ExperimentConfig, frequencies: &[f64]) -> Result<Vec<FrequencyPoint>, WeakValueError> {
    let Some((&first, rest)) = frequencies.split_first() else {
        return Ok(Vec::new());
    };
    if config.mode == BackactionMode::IdealOperator {
        return Err(WeakValueError::InvalidConfig("a frequency sweep needs simulated probes".into()));
    }
    let mut c = config.clone();
    c.frequency = first;
    c.extra_frequencies = rest.to_vec();
    let ctx = ExperimentContext::new(&c)?;
    let records = run_ensemble(&ctx);
    let freqs = c.frequencies();
    let length = ctx.geometry().device_length;
    frequencies
        .iter()
        .map(|f| {
            let k = freqs.iter().position(|g| g == f).expect("frequency is configured");
            let values: Vec<f64> =
                records.iter().filter(|r| r.discard.is_none()).filter_map(|r| r.weak.get(k).map(|w| w.value)).collect();
            let dist = build_distribution(&values, Binning::FreedmanDiaconis, ctx.measurement_time())?;
            let fit = fit_gaussian_sigma(&dist, c.mass, length, c.charge)?;
            Ok(FrequencyPoint { frequency: *f, fit })
        })
        .collect()
}

/// Error_wave for one cable distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistancePoint {
    pub distance: f64,
    /// Mean of ∫|ψ − ψ_mean-field|² dx at t_m over the runs.
    pub error_wave: f64,
    pub stderr: f64,
    pub runs: usize,
    pub discarded: usize,
}

/// Backaction of the probes on ψ at t_m as a function of the cable distance.
///
/// The mean-field reference evolves without potential, so it is the same free
/// state for every run; runs j = 0..`runs` share their seeds across distances.
pub fn distance_sweep(
    config: &ExperimentConfig,
    distances: &[f64],
    runs: usize,
) -> Result<Vec<DistancePoint>, WeakValueError> {
    distances
        .iter()
        .map(|&d| {
            let mut c = config.clone();
            c.geometry.cable_distance = d;
            c.mode = BackactionMode::Full;
            let ctx = ExperimentContext::new(&c)?;
            let reference = ctx.free_state_at_measurement()?;
            let errors: Vec<Option<f64>> = (0..runs as u64)
                .into_par_iter()
                .map(|j| {
                    let (record, state) = ctx.run(j, true);
                    match (record.discard, state) {
                        (None, Some(psi)) => wavefunction_error(&psi, &reference).ok(),
                        _ => None,
                    }
                })
                .collect();
            let ok: Vec<f64> = errors.iter().flatten().copied().collect();
            let s = Summary::of(&ok).ok_or(WeakValueError::NoRecords)?;
            Ok(DistancePoint {
                distance: d,
                error_wave: s.mean,
                stderr: s.stderr(),
                runs: ok.len(),
                discarded: runs - ok.len(),
            })
        })
        .collect()
}
