use super::{GridSpec, GuidanceView, QuantumError, SplitStepPropagator, WaveField};

/// Sampled Bohmian trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BohmianTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    /// Steps at which a node forced reuse of the previous velocity.
    pub node_events: usize,
}

impl BohmianTrajectory {
    pub fn start(time: f64, position: f64, velocity: f64) -> Self {
        Self { times: vec![time], positions: vec![position], velocities: vec![velocity], node_events: 0 }
    }

    pub fn push(&mut self, time: f64, position: f64, velocity: f64) {
        self.times.push(time);
        self.positions.push(position);
        self.velocities.push(velocity);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_position(&self) -> Option<f64> {
        self.positions.last().copied()
    }

    /// Linear interpolation of the position at `t` within the sampled range.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        let i = self.times.partition_point(|&s| s < t);
        if i == 0 {
            return (self.times.first() == Some(&t)).then(|| self.positions[0]);
        }
        if i == self.times.len() {
            return None;
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
        Some(self.positions[i - 1] * (1.0 - w) + self.positions[i] * w)
    }
}

/// Explicit midpoint integrator of the guidance equation with node fallback.
#[derive(Clone, Debug)]
pub struct GuidanceIntegrator {
    lo: f64,
    hi: f64,
    last_velocity: f64,
    node_events: usize,
}

impl GuidanceIntegrator {
    /// Trajectories must stay inside the grid interior (outside any absorbing layer).
    pub fn new(grid: &GridSpec) -> Self {
        let (lo, hi) = grid.interior();
        let margin = 4.0 * grid.dx;
        Self { lo: lo + margin, hi: hi - margin, last_velocity: 0.0, node_events: 0 }
    }

    pub fn node_events(&self) -> usize {
        self.node_events
    }

    /// Guidance velocity at `x`; at a node the previous velocity is reused and counted.
    pub fn velocity(&mut self, view: &GuidanceView, x: f64) -> Result<f64, QuantumError> {
        let time = view.wave().time;
        if !(x >= self.lo && x <= self.hi) {
            return Err(QuantumError::Escaped { x, time });
        }
        match view.velocity(x) {
            Ok(v) => {
                self.last_velocity = v;
                Ok(v)
            }
            Err(QuantumError::Node { .. }) => {
                self.node_events += 1;
                Ok(self.last_velocity)
            }
            Err(QuantumError::OutsideGrid { x }) => Err(QuantumError::Escaped { x, time }),
            Err(e) => Err(e),
        }
    }

    /// One midpoint step from `x` (velocity `v_now` under `now`) to the time of `next`.
    ///
    /// The half-step velocity is the average of both snapshots at the predicted midpoint.
    pub fn step(
        &mut self,
        v_now: f64,
        now: &GuidanceView,
        next: &GuidanceView,
        x: f64,
        dt: f64,
    ) -> Result<f64, QuantumError> {
        let mid = x + 0.5 * dt * v_now;
        let v_mid = 0.5 * (self.velocity(now, mid)? + self.velocity(next, mid)?);
        let moved = x + dt * v_mid;
        if !(moved >= self.lo && moved <= self.hi) {
            return Err(QuantumError::Escaped { x: moved, time: next.wave().time });
        }
        Ok(moved)
    }
}

/// Midpoint step in the frozen velocity field of `psi`.
pub fn advance_trajectory(psi: &WaveField, x: f64, dt: f64) -> Result<f64, QuantumError> {
    let view = GuidanceView::new(psi);
    let mut integrator = GuidanceIntegrator::new(&psi.grid);
    let v = integrator.velocity(&view, x)?;
    integrator.step(v, &view, &view, x, dt)
}

/// Trajectories sharing one freely evolved wave function.
#[derive(Clone, Debug)]
pub struct EnsembleRun {
    pub trajectories: Vec<BohmianTrajectory>,
    /// Escape error per trajectory, if any; escaped trajectories stop at their last sample.
    pub escapes: Vec<Option<QuantumError>>,
    pub state: WaveField,
}

/// Evolves `psi0` with `propagator` for `steps` steps, carrying one trajectory per start.
/// Samples are stored every `record_every` steps and at the final step.
pub fn evolve_ensemble(
    psi0: &WaveField,
    starts: &[f64],
    propagator: &mut SplitStepPropagator,
    steps: usize,
    record_every: usize,
) -> Result<EnsembleRun, QuantumError> {
    let dt = propagator.dt();
    let record_every = record_every.max(1);
    let mut now = psi0.clone();
    let mut integrators: Vec<GuidanceIntegrator> = starts.iter().map(|_| GuidanceIntegrator::new(&psi0.grid)).collect();
    let mut positions = starts.to_vec();
    let mut velocities = Vec::with_capacity(starts.len());
    let mut escapes: Vec<Option<QuantumError>> = vec![None; starts.len()];
    let mut trajectories = Vec::with_capacity(starts.len());
    {
        let view = GuidanceView::new(&now);
        for (k, &x) in starts.iter().enumerate() {
            let v = match integrators[k].velocity(&view, x) {
                Ok(v) => v,
                Err(e) => {
                    escapes[k] = Some(e);
                    0.0
                }
            };
            velocities.push(v);
            trajectories.push(BohmianTrajectory::start(now.time, x, v));
        }
    }
    for step in 1..=steps {
        let mut next = now.clone();
        propagator.step(&mut next)?;
        let record = step % record_every == 0 || step == steps;
        {
            let (vn, vx) = (GuidanceView::new(&now), GuidanceView::new(&next));
            for k in 0..starts.len() {
                if escapes[k].is_some() {
                    continue;
                }
                let outcome = integrators[k]
                    .step(velocities[k], &vn, &vx, positions[k], dt)
                    .and_then(|x| Ok((x, integrators[k].velocity(&vx, x)?)));
                match outcome {
                    Ok((x, v)) => {
                        positions[k] = x;
                        velocities[k] = v;
                        if record {
                            trajectories[k].push(next.time, x, v);
                        }
                    }
                    Err(e) => escapes[k] = Some(e),
                }
            }
        }
        now = next;
    }
    for (t, i) in trajectories.iter_mut().zip(&integrators) {
        t.node_events = i.node_events();
    }
    Ok(EnsembleRun { trajectories, escapes, state: now })
}
