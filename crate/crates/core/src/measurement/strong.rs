use serde::{Deserialize, Serialize};

use crate::electrostatics::{weighting_gradient, DeviceGeometry};
use nalgebra::Vector3;

/// One point of a system trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub position: f64,
    pub velocity: f64,
}

/// A tile fires once |q F_i(X)·v| reaches `fraction` of q·α·`reference_speed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionTrigger {
    pub fraction: f64,
    pub reference_speed: f64,
    /// Earliest time at which a pulse counts.
    pub after: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongOutcome {
    pub tile: usize,
    /// Centre of the firing tile (m).
    pub position: f64,
    pub time: f64,
}

/// First tile whose induced current pulse crosses the trigger level.
pub fn detect_strong_position<I>(
    samples: I,
    geometry: &DeviceGeometry,
    trigger: &DetectionTrigger,
) -> Option<StrongOutcome>
where
    I: IntoIterator<Item = TrajectorySample>,
{
    let centers = geometry.tile_centers();
    if centers.is_empty() {
        return None;
    }
    for s in samples.into_iter().filter(|s| s.time >= trigger.after) {
        // the exponential field is largest at the nearest tile centre
        let i = nearest(&centers, s.position);
        let field = geometry.tile_weighting(i);
        let level = match field {
            crate::electrostatics::WeightingField::Exponential { alpha, .. } => alpha * trigger.reference_speed.abs(),
            crate::electrostatics::WeightingField::ParallelPlate { .. } => {
                unreachable!("tiles use exponential fields")
            }
        };
        let pulse = (weighting_gradient(&field, &Vector3::new(s.position, 0.0, 0.0)).x * s.velocity).abs();
        if pulse >= trigger.fraction * level {
            return Some(StrongOutcome { tile: i, position: centers[i], time: s.time });
        }
    }
    None
}

fn nearest(centers: &[f64], x: f64) -> usize {
    let i = centers.partition_point(|&c| c < x);
    match i {
        0 => 0,
        i if i == centers.len() => i - 1,
        i => {
            if x - centers[i - 1] <= centers[i] - x {
                i - 1
            } else {
                i
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY};
    use crate::electrostatics::{induced_current, Axis, GeometryParams, InductionSource, RectSurface, SurfaceRole};

    fn geometry() -> DeviceGeometry {
        DeviceGeometry::build(&GeometryParams::default()).unwrap()
    }

    fn trigger() -> DetectionTrigger {
        DetectionTrigger { fraction: 0.5, reference_speed: 1.784e5, after: 0.0 }
    }

    fn uniform(x0: f64, v: f64, steps: usize, dt: f64) -> Vec<TrajectorySample> {
        (0..steps)
            .map(|i| TrajectorySample { time: i as f64 * dt, position: x0 + v * i as f64 * dt, velocity: v })
            .collect()
    }

    #[test]
    fn crossing_the_tile_centre() {
        let g = geometry();
        // tile 27 spans [135, 140] nm with centre 137.5 nm; tile 28 is centred at 142.5 nm
        let path = uniform(138.3e-9, 1.784e5, 100, 1e-16);
        let out = detect_strong_position(path, &g, &trigger()).unwrap();
        assert_eq!(out.tile, 27);
        assert!((out.position - 137.5e-9).abs() < 1e-18);
        let path = uniform(139.96e-9, 1.784e5, 100, 1e-16);
        let out = detect_strong_position(path, &g, &trigger()).unwrap();
        assert_eq!(out.tile, 28);
        assert!((out.position - 142.5e-9).abs() < 1e-18);
        assert!(out.time > 0.0);
    }

    #[test]
    fn trajectory_outside_the_plane_is_not_detected() {
        let g = geometry();
        let path = uniform(-50e-9, 1e4, 100, 1e-16);
        assert!(detect_strong_position(path, &g, &trigger()).is_none());
    }

    #[test]
    fn pulses_before_the_trigger_time_are_ignored() {
        let g = geometry();
        let path = uniform(100e-9, 1.784e5, 100, 1e-16);
        let t = DetectionTrigger { after: 5e-15, ..trigger() };
        assert!(detect_strong_position(path, &g, &t).unwrap().time >= 5e-15);
    }

    #[test]
    fn small_surface_pulse_narrows_with_area() {
        // ε∇Φ·v along a uniform path through the centre of a square tile, normal to it;
        // the flux jump at the crossing itself is excluded by sampling at half steps.
        let width_of = |side: f64| {
            let s = RectSurface::square(Vector3::zeros(), Axis::Y, side, SurfaceRole::StrongSmall);
            let v = Vector3::new(0.0, 1e5, 0.0);
            let dt = 1e-17;
            let times: Vec<f64> = (-20000..20000).map(|i| (i as f64 + 0.5) * dt).collect();
            let pulse: Vec<f64> = times
                .iter()
                .map(|&t| {
                    let r = v * t;
                    induced_current(&[r], &[v], &[ELEMENTARY_CHARGE], InductionSource::Surface(&s), VACUUM_PERMITTIVITY)
                        .unwrap()
                })
                .collect();
            let peak = pulse.iter().map(|p| p.abs()).fold(0.0, f64::max);
            let ipeak = pulse.iter().position(|p| p.abs() == peak).unwrap();
            let above = pulse.iter().filter(|p| p.abs() >= 0.5 * peak).count();
            (times[ipeak].abs(), above as f64 * dt)
        };
        let (t_big, w_big) = width_of(10e-9);
        let (t_small, w_small) = width_of(5e-9);
        assert!(w_small < 0.6 * w_big, "{w_small} {w_big}");
        assert!(t_big < 0.1 * w_big && t_small < 0.1 * w_small);
    }
}
