use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{BackactionMode, ExperimentConfig, WeakValueError};
use crate::electrostatics::DeviceGeometry;
use crate::measurement::{
    detect_strong_position, kraus_apply, measure_weak_current, CurrentSample, DetectionTrigger, GaussianKraus,
    InducedCharge, KrausBasis, MeasurementError, StrongOutcome, TrajectorySample,
};
use crate::probe::{
    background_line_potential, init_probe, probe_flux, BackgroundField, CableRegion, ProbeCable, ProbeModel,
};
use crate::quantum::{
    build_superposition, momentum_spectrum, BohmianTrajectory, DensitySampler, GuidanceIntegrator, GuidanceView,
    PotentialField, QuantumError, SplitStepPropagator, WaveField,
};
use crate::stats::Summary;

/// Why a record cannot be used.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DiscardReason {
    Escaped { time: f64, position: f64 },
    EnergyTolerance { estimate: f64 },
    Underflow { probability: f64 },
    Failed { message: String },
}

impl DiscardReason {
    fn from_quantum(e: QuantumError) -> Self {
        match e {
            QuantumError::Escaped { x, time } => Self::Escaped { time, position: x },
            QuantumError::EnergyTolerance { estimate, .. } => Self::EnergyTolerance { estimate },
            other => Self::Failed { message: other.to_string() },
        }
    }
}

/// Outcome of one two-time experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    /// Stream index j under the master seed.
    pub seed: u64,
    pub initial_position: f64,
    /// One pointer reading per configured frequency, in [`ExperimentConfig::frequencies`] order.
    pub weak: Vec<CurrentSample>,
    /// p_w = Ĩ_w·mL_x/q of the primary reading.
    pub weak_momentum: Option<f64>,
    /// X(t_m) and the guidance velocity there.
    pub measured_position: Option<f64>,
    pub measured_velocity: Option<f64>,
    pub strong: Option<StrongOutcome>,
    pub trajectory: BohmianTrajectory,
    pub discard: Option<DiscardReason>,
}

impl ExperimentRecord {
    pub fn is_postselected(&self) -> bool {
        self.discard.is_none() && self.strong.is_some() && self.weak_momentum.is_some()
    }
}

/// Probe noise σ of the weak reading with the system electron frozen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakCalibration {
    pub frequency: f64,
    pub windows: usize,
    /// Standard deviation of the probe part of Ĩ (A).
    pub sigma_current: f64,
    /// Momentum Kraus width σ_w = √2·σ_I·mL_x/q.
    pub kraus_width: f64,
}

#[derive(Clone, Debug)]
struct StepPlan {
    /// System steps per probe step.
    ratio: usize,
    measure: usize,
    last: usize,
    window_starts: Vec<usize>,
    burn_in: usize,
    record_every: usize,
}

/// Fine-grid cubic interpolation from the coarse potential nodes.
#[derive(Clone, Debug)]
struct CoarseNodes {
    positions: Vec<f64>,
    background: Vec<f64>,
    stencils: Vec<(usize, [f64; 4])>,
}

impl CoarseNodes {
    fn new(config: &ExperimentConfig, geometry: &DeviceGeometry, background_density: [f64; 2]) -> Self {
        let grid = &config.grid;
        let stride = config.probe.potential_stride;
        let count = (grid.n_points - 1).div_ceil(stride) + 1;
        let h = stride as f64 * grid.dx;
        let positions: Vec<f64> = (0..count).map(|k| grid.x_min + k as f64 * h).collect();
        let mut background = vec![0.0; count];
        for (cable, density) in geometry.cables.iter().zip(background_density) {
            let v = background_line_potential(
                cable,
                density,
                config.charge,
                &positions,
                config.probe.softening,
                geometry.permittivity,
            );
            background.iter_mut().zip(v).for_each(|(b, v)| *b += v);
        }
        let stencils = (0..grid.n_points)
            .map(|i| {
                let s = i as f64 / stride as f64;
                let base = (s.floor() as usize).saturating_sub(1).min(count.saturating_sub(4));
                let t = s - base as f64;
                let mut w = [0.0; 4];
                for (a, wa) in w.iter_mut().enumerate() {
                    *wa = (0..4).filter(|&b| b != a).map(|b| (t - b as f64) / (a as f64 - b as f64)).product();
                }
                (base, w)
            })
            .collect();
        Self { positions, background, stencils }
    }

    /// Background plus the softened Coulomb energy of every probe electron.
    fn fill(&self, cables: &[ProbeCable], k: f64, softening: f64, nodes: &mut [f64], out: &mut [f64]) {
        nodes.copy_from_slice(&self.background);
        let a2 = softening * softening;
        for c in cables {
            for p in c.positions() {
                let rho2 = p.y * p.y + p.z * p.z + a2;
                for (v, &x) in nodes.iter_mut().zip(&self.positions) {
                    let d = x - p.x;
                    *v += k / (d * d + rho2).sqrt();
                }
            }
        }
        for (o, (base, w)) in out.iter_mut().zip(&self.stencils) {
            *o = w[0] * nodes[*base] + w[1] * nodes[base + 1] + w[2] * nodes[base + 2] + w[3] * nodes[base + 3];
        }
    }
}

/// Operator-pipeline inputs shared by all ideal-mode experiments.
#[derive(Clone, Debug)]
struct IdealSetup {
    state: WaveField,
    momenta: Vec<f64>,
    cumulative: Vec<f64>,
    dp: f64,
    weak_width: f64,
    position_width: f64,
}

/// Immutable per-ensemble data: initial state, geometry, backgrounds and step plan.
pub struct ExperimentContext {
    config: ExperimentConfig,
    geometry: DeviceGeometry,
    initial: WaveField,
    sampler: DensitySampler,
    propagator: SplitStepPropagator,
    regions: [CableRegion; 2],
    backgrounds: [Arc<BackgroundField>; 2],
    nodes: CoarseNodes,
    model: ProbeModel,
    plan: StepPlan,
    trigger: DetectionTrigger,
    ideal: Option<IdealSetup>,
    warnings: Vec<String>,
    calibration: Option<WeakCalibration>,
}

impl ExperimentContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self, WeakValueError> {
        let warnings = config.validate()?;
        let geometry = DeviceGeometry::build(&config.geometry)?;
        let mut initial = build_superposition(&config.packets, &config.grid, config.mass, config.charge)?;
        initial.time = config.t0;
        let sampler = DensitySampler::new(&initial)?;
        let propagator = SplitStepPropagator::new(config.grid, config.mass, config.time_step)?
            .with_energy_tolerance(config.energy_tolerance);
        let regions = geometry.cables.map(|bounds| CableRegion {
            bounds,
            count: config.probe.count,
            temperature: config.probe.thermostat.temperature,
            distance: geometry.cable_distance,
        });
        let density = regions.map(|r| -(r.count as f64) * config.charge / r.bounds.volume());
        let backgrounds = [0, 1].map(|i| {
            Arc::new(BackgroundField::new(
                regions[i].bounds,
                density[i],
                geometry.permittivity,
                config.probe.background_resolution,
            ))
        });
        let nodes = CoarseNodes::new(config, &geometry, density);
        let model = ProbeModel {
            mass: config.mass,
            charge: config.charge,
            softening: config.probe.softening,
            permittivity: geometry.permittivity,
        };
        let plan = Self::plan(config);
        let trigger = DetectionTrigger {
            fraction: config.trigger_fraction,
            reference_speed: config.reference_speed(),
            after: config.t0 + plan.measure as f64 * config.time_step,
        };
        let mut ctx = Self {
            config: config.clone(),
            geometry,
            initial,
            sampler,
            propagator,
            regions,
            backgrounds,
            nodes,
            model,
            plan,
            trigger,
            ideal: None,
            warnings,
            calibration: None,
        };
        if config.mode == BackactionMode::IdealOperator {
            let weak_width = match config.weak_width {
                Some(w) => w,
                None => {
                    let cal = calibrate_weak_width(config, 400)?;
                    ctx.calibration = Some(cal);
                    cal.kraus_width
                }
            };
            ctx.ideal = Some(ctx.ideal_setup(weak_width)?);
        }
        Ok(ctx)
    }

    fn plan(config: &ExperimentConfig) -> StepPlan {
        let dt = config.time_step;
        let ratio = (config.probe.time_step / dt).round().max(1.0) as usize;
        let to_boundary = |t: f64| ((t / dt / ratio as f64).round() as usize) * ratio;
        let measure = to_boundary(config.t_m - config.t0);
        let window_starts =
            config.frequencies().iter().map(|f| measure - to_boundary(1.0 / f).clamp(ratio, measure)).collect();
        StepPlan {
            ratio,
            measure,
            last: ((config.end - config.t0) / dt).round() as usize,
            window_starts,
            burn_in: (config.probe.burn_in / config.probe.time_step).round() as usize,
            record_every: ((config.record_interval / dt).round() as usize).max(1),
        }
    }

    fn ideal_setup(&self, weak_width: f64) -> Result<IdealSetup, WeakValueError> {
        let mut state = self.initial.clone();
        let mut free = self.propagator.clone();
        for _ in 0..self.plan.measure {
            free.step(&mut state)?;
        }
        let spectrum = momentum_spectrum(&state);
        let mut cumulative = Vec::with_capacity(spectrum.density.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for d in &spectrum.density {
            acc += d;
            cumulative.push(acc);
        }
        cumulative.iter_mut().for_each(|c| *c /= acc);
        let tile = &self.geometry.tiles[0];
        Ok(IdealSetup {
            state,
            momenta: spectrum.momenta,
            cumulative,
            dp: spectrum.dp,
            weak_width,
            position_width: (0.5 * tile.area()).sqrt(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn geometry(&self) -> &DeviceGeometry {
        &self.geometry
    }

    pub fn initial_state(&self) -> &WaveField {
        &self.initial
    }

    pub fn sampler(&self) -> &DensitySampler {
        &self.sampler
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Probe calibration performed for the ideal-operator mode, if any.
    pub fn calibration(&self) -> Option<&WeakCalibration> {
        self.calibration.as_ref()
    }

    /// Kraus widths (σ_w, σ_s) of the ideal-operator mode.
    pub fn kraus_widths(&self) -> Option<(f64, f64)> {
        self.ideal.as_ref().map(|s| (s.weak_width, s.position_width))
    }

    /// Time actually used for the weak reading (t_m rounded to a probe step).
    pub fn measurement_time(&self) -> f64 {
        self.config.t0 + self.plan.measure as f64 * self.config.time_step
    }

    /// Freely evolved state at the measurement time.
    pub fn free_state_at_measurement(&self) -> Result<WaveField, WeakValueError> {
        if let Some(s) = &self.ideal {
            return Ok(s.state.clone());
        }
        let mut psi = self.initial.clone();
        let mut free = self.propagator.clone();
        for _ in 0..self.plan.measure {
            free.step(&mut psi)?;
        }
        Ok(psi)
    }

    fn rng(&self, j: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(j);
        rng
    }

    fn cables(&self, x0: f64, interacting: bool, rng: &mut ChaCha8Rng) -> Result<Vec<ProbeCable>, WeakValueError> {
        let system = interacting.then_some(x0);
        let mut cables = Vec::with_capacity(2);
        for (region, bg) in self.regions.iter().zip(&self.backgrounds) {
            let electrons = init_probe(region, self.model.mass, rng)?;
            cables.push(ProbeCable::new(*region, electrons, Arc::clone(bg), self.model, system)?);
        }
        let dt = self.config.probe.time_step;
        for _ in 0..self.plan.burn_in {
            for c in cables.iter_mut() {
                c.step(system, &self.config.probe.thermostat, dt, rng)?;
            }
        }
        Ok(cables)
    }

    fn induced_charge(&self, time: f64, x: f64, cables: &[ProbeCable]) -> InducedCharge {
        let eps = self.geometry.permittivity;
        let probes = cables
            .iter()
            .zip(&self.geometry.cable_sections)
            .map(|(c, s)| eps * probe_flux(c.electrons(), s, self.model.charge, eps))
            .sum();
        InducedCharge { time, system: self.config.charge * x / self.geometry.device_length, probes }
    }

    fn to_momentum(&self, current: f64) -> f64 {
        current * self.config.mass * self.geometry.device_length / self.config.charge
    }

    /// Co-evolution of system and probes; returns the record and, on request, ψ at t_m.
    pub(crate) fn run(&self, j: u64, keep_state: bool) -> (ExperimentRecord, Option<WaveField>) {
        let mut rng = self.rng(j);
        let x0 = self.sampler.sample(&mut rng);
        let mut record = ExperimentRecord {
            seed: j,
            initial_position: x0,
            weak: Vec::new(),
            weak_momentum: None,
            measured_position: None,
            measured_velocity: None,
            strong: None,
            trajectory: BohmianTrajectory::default(),
            discard: None,
        };
        let mut kept = None;
        let outcome = match self.config.mode {
            BackactionMode::IdealOperator => self.run_ideal(x0, &mut rng, &mut record),
            mode => self.run_coupled(mode, x0, &mut rng, &mut record, keep_state.then_some(&mut kept)),
        };
        if let Err(reason) = outcome {
            record.discard = Some(reason);
        }
        (record, kept)
    }

    fn run_coupled(
        &self,
        mode: BackactionMode,
        x0: f64,
        rng: &mut ChaCha8Rng,
        record: &mut ExperimentRecord,
        mut keep: Option<&mut Option<WaveField>>,
    ) -> Result<(), DiscardReason> {
        let fail = |e: WeakValueError| DiscardReason::Failed { message: e.to_string() };
        let cfg = &self.config;
        let plan = &self.plan;
        let full = mode == BackactionMode::Full;
        let mut cables = self.cables(x0, true, rng).map_err(fail)?;
        let mut propagator = self.propagator.clone();
        let mut now = self.initial.clone();
        let mut next = self.initial.clone();
        let mut integrator = GuidanceIntegrator::new(&cfg.grid);
        let mut x = x0;
        let mut peak_now = now.max_density();
        let mut v = integrator
            .velocity(&GuidanceView::with_max_density(&now, peak_now), x)
            .map_err(DiscardReason::from_quantum)?;
        record.trajectory = BohmianTrajectory::start(now.time, x, v);
        let coulomb = crate::constants::coulomb_factor(cfg.charge, cfg.charge, self.geometry.permittivity);
        let mut node_values = vec![0.0; self.nodes.positions.len()];
        let mut potential = PotentialField::zeros(cfg.grid.n_points);
        let mut snapshots: Vec<Option<InducedCharge>> = vec![None; plan.window_starts.len()];
        let mut at_measure = None;
        let dt_probe = cfg.probe.time_step;

        for n in 0..=plan.last {
            if n % plan.ratio == 0 {
                if n == plan.measure || plan.window_starts.contains(&n) {
                    let charge = self.induced_charge(now.time, x, &cables);
                    for (s, &start) in snapshots.iter_mut().zip(&plan.window_starts) {
                        if start == n {
                            *s = Some(charge);
                        }
                    }
                    if n == plan.measure {
                        at_measure = Some(charge);
                    }
                }
                if full {
                    self.nodes.fill(&cables, coulomb, cfg.probe.softening, &mut node_values, &mut potential.values);
                    propagator.set_potential(Some(&potential), &now).map_err(DiscardReason::from_quantum)?;
                }
            }
            if n == plan.measure {
                record.measured_position = Some(x);
                record.measured_velocity = Some(v);
                if let Some(k) = keep.as_deref_mut() {
                    *k = Some(now.clone());
                }
            }
            if n >= plan.measure {
                let sample = TrajectorySample { time: now.time, position: x, velocity: v };
                if let Some(hit) = detect_strong_position([sample], &self.geometry, &self.trigger) {
                    record.strong = Some(hit);
                    break;
                }
            }
            if n == plan.last {
                break;
            }
            next.amplitudes.copy_from_slice(&now.amplitudes);
            next.time = now.time;
            propagator.step(&mut next).map_err(DiscardReason::from_quantum)?;
            let peak_next = next.max_density();
            let (view_now, view_next) =
                (GuidanceView::with_max_density(&now, peak_now), GuidanceView::with_max_density(&next, peak_next));
            let moved = integrator
                .step(v, &view_now, &view_next, x, cfg.time_step)
                .and_then(|x| Ok((x, integrator.velocity(&view_next, x)?)));
            let (xn, vn) = match moved {
                Ok(p) => p,
                Err(e) => {
                    self.finish_weak(record, &snapshots, at_measure);
                    return Err(DiscardReason::from_quantum(e));
                }
            };
            std::mem::swap(&mut now, &mut next);
            peak_now = peak_next;
            x = xn;
            v = vn;
            if (n + 1) % plan.record_every == 0 || n + 1 == plan.measure {
                record.trajectory.push(now.time, x, v);
            }
            if (n + 1) % plan.ratio == 0 {
                for c in cables.iter_mut() {
                    c.step(Some(x), &cfg.probe.thermostat, dt_probe, rng).map_err(|e| fail(e.into()))?;
                }
            }
        }
        record.trajectory.node_events = integrator.node_events();
        self.finish_weak(record, &snapshots, at_measure);
        Ok(())
    }

    fn finish_weak(&self, record: &mut ExperimentRecord, starts: &[Option<InducedCharge>], end: Option<InducedCharge>) {
        let Some(end) = end else { return };
        record.weak = starts.iter().flatten().filter_map(|s| measure_weak_current(s, &end, 0).ok()).collect();
        record.weak_momentum = record.weak.first().map(|w| self.to_momentum(w.value));
    }

    fn run_ideal(&self, x0: f64, rng: &mut ChaCha8Rng, record: &mut ExperimentRecord) -> Result<(), DiscardReason> {
        let setup = self.ideal.as_ref().expect("ideal mode has its setup");
        let cfg = &self.config;
        let plan = &self.plan;
        // free Bohmian trajectory up to t_m
        let mut propagator = self.propagator.clone();
        let mut now = self.initial.clone();
        let mut next = self.initial.clone();
        let mut integrator = GuidanceIntegrator::new(&cfg.grid);
        let mut x = x0;
        let mut peak_now = now.max_density();
        let mut v = integrator
            .velocity(&GuidanceView::with_max_density(&now, peak_now), x)
            .map_err(DiscardReason::from_quantum)?;
        record.trajectory = BohmianTrajectory::start(now.time, x, v);
        for n in 0..plan.measure {
            next.amplitudes.copy_from_slice(&now.amplitudes);
            next.time = now.time;
            propagator.step(&mut next).map_err(DiscardReason::from_quantum)?;
            let peak_next = next.max_density();
            let (view_now, view_next) =
                (GuidanceView::with_max_density(&now, peak_now), GuidanceView::with_max_density(&next, peak_next));
            x = integrator.step(v, &view_now, &view_next, x, cfg.time_step).map_err(DiscardReason::from_quantum)?;
            v = integrator.velocity(&view_next, x).map_err(DiscardReason::from_quantum)?;
            std::mem::swap(&mut now, &mut next);
            peak_now = peak_next;
            if (n + 1) % plan.record_every == 0 || n + 1 == plan.measure {
                record.trajectory.push(now.time, x, v);
            }
        }
        record.trajectory.node_events = integrator.node_events();
        record.measured_position = Some(x);
        record.measured_velocity = Some(v);

        // pointer: system momentum drawn from |a(p)|², broadened by the Kraus width
        let u: f64 = rng.gen();
        let cell = setup.cumulative.partition_point(|&c| c <= u).clamp(1, setup.cumulative.len() - 1) - 1;
        let (lo, hi) = (setup.cumulative[cell], setup.cumulative[cell + 1]);
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
        let p_system = setup.momenta[cell] + (frac - 0.5) * setup.dp;
        let noise: f64 = rng.sample::<f64, _>(StandardNormal) * setup.weak_width / std::f64::consts::SQRT_2;
        let p_w = p_system + noise;
        let weak_kraus =
            GaussianKraus::new(KrausBasis::Momentum, p_w, setup.weak_width).map_err(measurement_discard)?;
        let (mut after, _) = kraus_apply(&setup.state, &weak_kraus).map_err(measurement_discard)?;
        // the strong reading follows one system step later
        let mut free = self.propagator.clone();
        free.step(&mut after).map_err(DiscardReason::from_quantum)?;

        let to_current = |p: f64| p * cfg.charge / (cfg.mass * self.geometry.device_length);
        let t_m = self.measurement_time();
        record.weak = vec![CurrentSample {
            value: to_current(p_w),
            window_start: t_m,
            window_end: t_m,
            surface_id: 0,
            system: to_current(p_system),
            probes: to_current(noise),
        }];
        record.weak_momentum = Some(p_w);

        let centers = self.geometry.tile_centers();
        let weights: Vec<f64> = centers
            .iter()
            .map(|&c| {
                let k = GaussianKraus::new(KrausBasis::Position, c, setup.position_width).expect("positive width");
                after
                    .amplitudes
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let kv = k.value(after.grid.x(i));
                        kv * kv * a.norm_sqr()
                    })
                    .sum::<f64>()
                    * after.grid.dx
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 1e-300) {
            return Err(DiscardReason::Underflow { probability: total });
        }
        let u: f64 = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let tile = weights
            .iter()
            .position(|w| {
                acc += w;
                acc > u
            })
            .unwrap_or(centers.len() - 1);
        record.strong = Some(StrongOutcome { tile, position: centers[tile], time: after.time });
        Ok(())
    }
}

fn measurement_discard(e: MeasurementError) -> DiscardReason {
    match e {
        MeasurementError::Underflow(p) => DiscardReason::Underflow { probability: p },
        other => DiscardReason::Failed { message: other.to_string() },
    }
}

/// One experiment j under the context's master seed.
pub fn run_single_experiment(ctx: &ExperimentContext, j: u64) -> ExperimentRecord {
    ctx.run(j, false).0
}

/// Experiments 0..M in parallel; the result is ordered by j and independent of scheduling.
pub fn run_ensemble(ctx: &ExperimentContext) -> Vec<ExperimentRecord> {
    (0..ctx.config.experiments as u64).into_par_iter().map(|j| run_single_experiment(ctx, j)).collect()
}

/// Probe-only estimate of the weak-reading noise at the primary frequency.
///
/// The system electron sits at the mean initial position; consecutive windows of
/// one long probe run after the burn-in are used.
pub fn calibrate_weak_width(config: &ExperimentConfig, windows: usize) -> Result<WeakCalibration, WeakValueError> {
    let mut probe_only = config.clone();
    probe_only.mode = BackactionMode::MeanField;
    probe_only.weak_width = None;
    let ctx = ExperimentContext::new(&probe_only)?;
    let mut rng = ctx.rng(u64::MAX);
    let x = ctx.initial.mean_position();
    let mut cables = ctx.cables(x, true, &mut rng)?;
    let per_window = ((1.0 / config.frequency) / config.probe.time_step).round().max(1.0) as usize;
    let length = per_window as f64 * config.probe.time_step;
    let mut previous = ctx.induced_charge(0.0, x, &cables).probes;
    let mut currents = Vec::with_capacity(windows);
    for _ in 0..windows {
        for _ in 0..per_window {
            for c in cables.iter_mut() {
                c.step(Some(x), &config.probe.thermostat, config.probe.time_step, &mut rng)?;
            }
        }
        let q = ctx.induced_charge(0.0, x, &cables).probes;
        currents.push((q - previous) / length);
        previous = q;
    }
    let s = Summary::of(&currents).ok_or(WeakValueError::NoRecords)?;
    let sigma_current = s.std_dev();
    Ok(WeakCalibration {
        frequency: config.frequency,
        windows,
        sigma_current,
        kraus_width: std::f64::consts::SQRT_2 * ctx.to_momentum(sigma_current).abs(),
    })
}
