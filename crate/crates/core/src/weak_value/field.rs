use std::io::Write;

use serde::Serialize;

use super::{ExperimentContext, ExperimentRecord, WeakValueError};
use crate::constants::HBAR;
use crate::electrostatics::DeviceGeometry;
use crate::oracle::condition_ratio;
use crate::quantum::{interpolate, WaveField};
use crate::stats::Summary;

/// Below this σ_w·σ_s/ħ the conditional average is not read as a Bohmian velocity.
pub const MIN_CONDITION_RATIO: f64 = 10.0;

/// One postselection bin (a detection tile).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldBin {
    pub tile: usize,
    pub x_s: f64,
    /// Sample mean, absent for empty bins.
    pub mean: Option<f64>,
    /// Sample standard deviation over √count.
    pub stderr: f64,
    pub count: usize,
}

/// Conditional averages per tile, in momentum or velocity units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VelocityField {
    pub bins: Vec<FieldBin>,
    /// σ_w·σ_s/ħ, when it could be estimated.
    pub condition_ratio: Option<f64>,
    /// False when the condition ratio is below [`MIN_CONDITION_RATIO`].
    pub bohmian: bool,
}

impl VelocityField {
    pub fn occupied(&self, min_count: usize) -> impl Iterator<Item = &FieldBin> {
        self.bins.iter().filter(move |b| b.mean.is_some() && b.count >= min_count)
    }

    fn scaled(mut self, factor: f64) -> Self {
        for b in self.bins.iter_mut() {
            b.mean = b.mean.map(|m| m * factor);
            b.stderr *= factor.abs();
        }
        self
    }

    /// CSV with columns `x_s_m, v_mps, stderr_mps, count`; empty bins leave the value blank.
    pub fn write_csv<W: Write>(&self, mut out: W, header_comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = header_comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "x_s_m,v_mps,stderr_mps,count")?;
        for b in &self.bins {
            match b.mean {
                Some(m) => writeln!(out, "{:e},{:e},{:e},{}", b.x_s, m, b.stderr, b.count)?,
                None => writeln!(out, "{:e},,,0", b.x_s)?,
            }
        }
        Ok(())
    }
}

/// Per-tile sample mean of p_w over postselected records.
pub fn conditional_expectation(records: &[ExperimentRecord], centers: &[f64]) -> Result<VelocityField, WeakValueError> {
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); centers.len()];
    for r in records.iter().filter(|r| r.is_postselected()) {
        let (Some(s), Some(p)) = (r.strong, r.weak_momentum) else {
            continue;
        };
        if let Some(g) = groups.get_mut(s.tile) {
            g.push(p);
        }
    }
    if groups.iter().all(|g| g.is_empty()) {
        return Err(WeakValueError::EmptyPostselection);
    }
    let bins = groups
        .iter()
        .zip(centers)
        .enumerate()
        .map(|(tile, (g, &x_s))| match Summary::of(g) {
            Some(s) => FieldBin {
                tile,
                x_s,
                mean: Some(s.mean),
                stderr: if s.count > 1 { s.stderr() } else { 0.0 },
                count: s.count,
            },
            None => FieldBin { tile, x_s, mean: None, stderr: 0.0, count: 0 },
        })
        .collect();
    Ok(VelocityField { bins, condition_ratio: None, bohmian: true })
}

/// E[p_w | x_s]/m with the condition ratio attached.
///
/// In the coupled modes σ_w is estimated from the probe part of the readings
/// (√2 times its momentum spread); in the ideal mode it is the Kraus width.
pub fn velocity_field(records: &[ExperimentRecord], ctx: &ExperimentContext) -> Result<VelocityField, WeakValueError> {
    let cfg = ctx.config();
    let geometry = ctx.geometry();
    let mut field = conditional_expectation(records, &geometry.tile_centers())?.scaled(1.0 / cfg.mass);
    let sigma_s = (0.5 * geometry.tiles[0].area()).sqrt();
    let sigma_w = match ctx.kraus_widths() {
        Some((w, _)) => Some(w),
        None => {
            let noise: Vec<f64> = records
                .iter()
                .filter(|r| r.discard.is_none())
                .filter_map(|r| r.weak.first())
                .map(|w| w.probes)
                .collect();
            Summary::of(&noise)
                .filter(|s| s.count > 1)
                .map(|s| std::f64::consts::SQRT_2 * s.std_dev() * cfg.mass * geometry.device_length / cfg.charge.abs())
        }
    };
    field.condition_ratio = sigma_w.map(|w| condition_ratio(w, sigma_s));
    field.bohmian = field.condition_ratio.is_some_and(|r| r >= MIN_CONDITION_RATIO);
    Ok(field)
}

/// ∫J dx / ∫|ψ|² dx over the x-extent of `tile`, or the guidance velocity at its
/// centre when `at_center` is set.
pub fn reference_velocity(psi: &WaveField, geometry: &DeviceGeometry, tile: usize, at_center: bool) -> Option<f64> {
    let t = geometry.tiles.get(tile)?;
    if at_center {
        let a = interpolate(psi, t.center.x).ok()?;
        let rho = a.density();
        return (rho > 0.0).then(|| a.current(psi.mass) / rho);
    }
    let (lo, hi) = (t.center.x - 0.5 * t.extent_a, t.center.x + 0.5 * t.extent_a);
    let steps = ((hi - lo) / (0.25 * psi.grid.dx)).ceil() as usize;
    let h = (hi - lo) / steps as f64;
    let (mut j, mut rho) = (0.0, 0.0);
    for i in 0..=steps {
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let a = interpolate(psi, lo + i as f64 * h).ok()?;
        j += w * a.current(psi.mass);
        rho += w * a.density();
    }
    (rho > 0.0).then(|| j / rho)
}

/// Number of sign groups among the deviations from `v0` of well-filled bins
/// that exceed one standard error (neighbouring deviations of equal sign form one group).
pub fn interference_alternations(field: &VelocityField, v0: f64, min_count: usize) -> usize {
    let signs: Vec<f64> = field
        .occupied(min_count)
        .filter_map(|b| {
            let d = b.mean? - v0;
            (d.abs() > b.stderr).then(|| d.signum())
        })
        .collect();
    usize::from(!signs.is_empty()) + signs.windows(2).filter(|p| p[0] != p[1]).count()
}

/// Unconditioned average of one weak reading over usable records.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakMean {
    pub frequency_index: usize,
    pub mean: f64,
    pub stderr: f64,
    pub std_dev: f64,
    pub count: usize,
}

pub fn weak_mean(records: &[ExperimentRecord], frequency_index: usize) -> Result<WeakMean, WeakValueError> {
    let values: Vec<f64> = records
        .iter()
        .filter(|r| r.discard.is_none())
        .filter_map(|r| r.weak.get(frequency_index).map(|w| w.value))
        .collect();
    let s = Summary::of(&values).ok_or(WeakValueError::NoRecords)?;
    Ok(WeakMean { frequency_index, mean: s.mean, stderr: s.stderr(), std_dev: s.std_dev(), count: s.count })
}

/// ħ/σ_s of a detection tile, the momentum scale the weak width must exceed.
pub fn position_momentum_scale(geometry: &DeviceGeometry) -> f64 {
    HBAR / (0.5 * geometry.tiles[0].area()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electrostatics::GeometryParams;
    use crate::measurement::StrongOutcome;
    use crate::quantum::BohmianTrajectory;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn record(tile: usize, x_s: f64, p: f64) -> ExperimentRecord {
        ExperimentRecord {
            seed: 0,
            initial_position: 0.0,
            weak: Vec::new(),
            weak_momentum: Some(p),
            measured_position: None,
            measured_velocity: None,
            strong: Some(StrongOutcome { tile, position: x_s, time: 0.0 }),
            trajectory: BohmianTrajectory::default(),
            discard: None,
        }
    }

    fn centers() -> Vec<f64> {
        DeviceGeometry::build(&GeometryParams::default()).unwrap().tile_centers()
    }

    #[test]
    fn constant_momentum_gives_flat_field() {
        let c = centers();
        let records: Vec<_> = (0..200).map(|i| record(10 + i % 7, c[10 + i % 7], 1.6e-25)).collect();
        let f = conditional_expectation(&records, &c).unwrap();
        for b in f.occupied(1) {
            assert!((b.mean.unwrap() - 1.6e-25).abs() < 1e-12 * 1.6e-25);
            assert!(b.stderr < 1e-12 * 1.6e-25);
        }
        assert_eq!(f.occupied(1).count(), 7);
        assert!(f.bins[0].mean.is_none());
    }

    #[test]
    fn linear_profile_is_recovered() {
        let c = centers();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 2e-25).unwrap();
        let slope = 3e-18;
        let records: Vec<_> = (0..20_000)
            .map(|i| {
                let t = 5 + i % 40;
                record(t, c[t], slope * c[t] + noise.sample(&mut rng))
            })
            .collect();
        let f = conditional_expectation(&records, &c).unwrap();
        let (x, y): (Vec<f64>, Vec<f64>) = f.occupied(1).map(|b| (b.x_s, b.mean.unwrap())).unzip();
        let (_, fitted, stderr) = crate::stats::linear_fit(&x, &y).unwrap();
        assert!((fitted - slope).abs() < 3.0 * stderr, "{fitted} {stderr}");
        for b in f.occupied(1) {
            assert!((b.mean.unwrap() - slope * b.x_s).abs() < 4.0 * b.stderr);
        }
    }

    #[test]
    fn unselected_and_discarded_records_are_ignored() {
        let c = centers();
        let mut r = vec![record(3, c[3], 1.0)];
        let mut lost = record(4, c[4], 2.0);
        lost.strong = None;
        r.push(lost);
        let mut bad = record(3, c[3], 5.0);
        bad.discard = Some(super::super::DiscardReason::Failed { message: "x".into() });
        r.push(bad);
        let f = conditional_expectation(&r, &c).unwrap();
        assert_eq!(f.bins[3].mean, Some(1.0));
        assert_eq!(f.bins[4].count, 0);
        assert!(matches!(conditional_expectation(&r[1..2], &c), Err(WeakValueError::EmptyPostselection)));
    }

    #[test]
    fn alternation_counting() {
        let bin = |tile, mean, stderr| FieldBin { tile, x_s: tile as f64, mean: Some(mean), stderr, count: 100 };
        let mut f = VelocityField {
            bins: vec![bin(0, 1.0, 0.1), bin(1, 3.0, 0.1), bin(2, 1.0, 0.1), bin(3, 2.05, 0.1), bin(4, 3.0, 0.1)],
            condition_ratio: None,
            bohmian: true,
        };
        // deviations from 2: −, +, −, (inside 1 stderr), +
        assert_eq!(interference_alternations(&f, 2.0, 50), 4);
        f.bins[1].count = 10;
        assert_eq!(interference_alternations(&f, 2.0, 50), 2);
        f.bins[1].count = 100;
        f.bins[0].mean = Some(3.0);
        assert_eq!(interference_alternations(&f, 2.0, 50), 3);
        f.bins.clear();
        assert_eq!(interference_alternations(&f, 2.0, 50), 0);
    }
}
