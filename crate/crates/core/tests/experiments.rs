use weakcurrent_core::constants::NANOMETER;
use weakcurrent_core::quantum::{evolve_ensemble, SplitStepPropagator};
use weakcurrent_core::weak_value::{
    distance_sweep, reconstruct_trajectories, run_ensemble, run_single_experiment, velocity_field, BackactionMode,
    ExperimentConfig, ExperimentContext, WeakValueError,
};

fn small(mode: BackactionMode, experiments: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::single_packet_default();
    c.mode = mode;
    c.experiments = experiments;
    c
}

#[test]
fn mean_field_trajectory_is_free_guidance() {
    let c = small(BackactionMode::MeanField, 1);
    let ctx = ExperimentContext::new(&c).unwrap();
    let record = run_single_experiment(&ctx, 3);
    assert!(record.discard.is_none(), "{:?}", record.discard);

    let mut prop = SplitStepPropagator::new(c.grid, c.mass, c.time_step).unwrap();
    let steps = (c.t_m / c.time_step).round() as usize;
    let every = (c.record_interval / c.time_step).round() as usize;
    let free = evolve_ensemble(ctx.initial_state(), &[record.initial_position], &mut prop, steps, every).unwrap();
    let reference = &free.trajectories[0];
    let mut compared = 0;
    for (t, x) in reference.times.iter().zip(&reference.positions) {
        if let Some(y) = record.trajectory.position_at(*t) {
            assert!((x - y).abs() < 1e-6 * NANOMETER, "t = {t:e}: {x:e} vs {y:e}");
            compared += 1;
        }
    }
    assert!(compared > 5);
    let xm = record.measured_position.unwrap();
    assert!((xm - reference.last_position().unwrap()).abs() < 1e-6 * NANOMETER);
}

#[test]
fn seeded_ensembles_are_identical() {
    let c = small(BackactionMode::Full, 3);
    let a = run_ensemble(&ExperimentContext::new(&c).unwrap());
    let b = run_ensemble(&ExperimentContext::new(&c).unwrap());
    assert_eq!(a, b);
    let mut other = c.clone();
    other.seed += 1;
    let d = run_ensemble(&ExperimentContext::new(&other).unwrap());
    assert_ne!(a[0].initial_position, d[0].initial_position);
}

#[test]
fn single_experiment_is_flagged_degenerate() {
    let ctx = ExperimentContext::new(&small(BackactionMode::Full, 1)).unwrap();
    assert!(ctx.warnings().iter().any(|w| w.contains("M = 1")));
    let records = run_ensemble(&ctx);
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].weak.len(), 1);
}

#[test]
fn trajectories_do_not_cross_without_backaction() {
    let ctx = ExperimentContext::new(&small(BackactionMode::MeanField, 24)).unwrap();
    let bundle = reconstruct_trajectories(&run_ensemble(&ctx)).unwrap();
    assert_eq!(bundle.paths.len(), 24);
    assert_eq!(bundle.crossing_count(), 0);
}

#[test]
fn probes_disturb_the_wave_function() {
    let c = small(BackactionMode::Full, 1);
    let points = distance_sweep(&c, &[13.0 * NANOMETER], 2).unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0].runs, 2);
    assert!(points[0].error_wave > 0.0 && points[0].error_wave < 1.0, "{:?}", points[0]);
}

#[test]
fn resting_packet_is_never_detected() {
    let mut c = small(BackactionMode::MeanField, 4);
    c.packets[0].velocity = 0.0;
    c.end = c.t_m + 0.02e-12;
    let ctx = ExperimentContext::new(&c).unwrap();
    let records = run_ensemble(&ctx);
    assert!(records.iter().all(|r| r.strong.is_none()));
    assert!(matches!(velocity_field(&records, &ctx), Err(WeakValueError::EmptyPostselection)));
}

#[test]
fn invalid_configurations_are_rejected() {
    let mut c = small(BackactionMode::Full, 1);
    c.t_m = c.end;
    assert!(matches!(ExperimentContext::new(&c), Err(WeakValueError::InvalidConfig(_))));
    let mut c = small(BackactionMode::Full, 1);
    c.geometry.weak_area = c.geometry.device_length.powi(2);
    assert!(matches!(ExperimentContext::new(&c), Err(WeakValueError::Geometry(_))));
    let mut c = small(BackactionMode::Full, 1);
    c.probe.time_step = 1.5 * c.time_step;
    assert!(ExperimentContext::new(&c).is_err());
}
