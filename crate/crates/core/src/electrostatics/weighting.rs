use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{flux_gradient, ElectrostaticsError, RectSurface};

/// Ramo–Shockley weighting field of an electrode (units 1/m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum WeightingField {
    /// Two large plates a distance `length` apart: uniform field along x.
    ParallelPlate { length: f64 },
    /// Small electrode centred at `center`: x-directed, decaying as e^{−α|r−r_s|}.
    Exponential { alpha: f64, center: Vector3<f64> },
}

impl WeightingField {
    /// Exponential field of a small electrode of the given area, α = √(2/S).
    pub fn exponential_for_area(area: f64, center: Vector3<f64>) -> Self {
        WeightingField::Exponential { alpha: (2.0 / area).sqrt(), center }
    }

    /// Weighting potential, defined for the parallel-plate field only.
    pub fn potential(&self, r: &Vector3<f64>) -> Option<f64> {
        match *self {
            WeightingField::ParallelPlate { length } => Some(r.x / length),
            WeightingField::Exponential { .. } => None,
        }
    }
}

pub fn weighting_gradient(field: &WeightingField, r: &Vector3<f64>) -> Vector3<f64> {
    match *field {
        WeightingField::ParallelPlate { length } => Vector3::new(1.0 / length, 0.0, 0.0),
        WeightingField::Exponential { alpha, center } => {
            Vector3::new(-alpha * (-alpha * (r - center).norm()).exp(), 0.0, 0.0)
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum InductionSource<'a> {
    Weighting(&'a WeightingField),
    /// Flux through a surface, Ĩ = ε ∇Φ·v.
    Surface(&'a RectSurface),
}

/// Instantaneous current Σ_k ε ∇Φ(X_k)·v_k induced on an electrode.
pub fn induced_current(
    positions: &[Vector3<f64>],
    velocities: &[Vector3<f64>],
    charges: &[f64],
    source: InductionSource<'_>,
    permittivity: f64,
) -> Result<f64, ElectrostaticsError> {
    if positions.len() != velocities.len() || positions.len() != charges.len() {
        return Err(ElectrostaticsError::LengthMismatch {
            positions: positions.len(),
            velocities: velocities.len(),
            charges: charges.len(),
        });
    }
    let total = positions
        .iter()
        .zip(velocities)
        .zip(charges)
        .map(|((r, v), &q)| match source {
            InductionSource::Weighting(field) => q * weighting_gradient(field, r).dot(v),
            InductionSource::Surface(surface) => permittivity * flux_gradient(surface, r, q, permittivity).dot(v),
        })
        .sum();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{speed_from_energy, ELECTRON_MASS, ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY};
    use crate::electrostatics::{flux_rect, Axis, SurfaceRole};
    use proptest::prelude::*;

    const LX: f64 = 280e-9;
    const EPS: f64 = VACUUM_PERMITTIVITY;

    #[test]
    fn parallel_plate_gradient() {
        let f = WeightingField::ParallelPlate { length: LX };
        let g = weighting_gradient(&f, &Vector3::new(12e-9, 3.0, -1.0));
        assert!((g.x - 3.571e6).abs() / 3.571e6 < 2e-4);
        assert_eq!((g.y, g.z), (0.0, 0.0));
    }

    #[test]
    fn exponential_alpha_and_decay() {
        let f = WeightingField::exponential_for_area(25e-18, Vector3::new(100e-9, 0.0, 0.0));
        let WeightingField::Exponential { alpha, .. } = f else { unreachable!() };
        assert!((alpha - 2.828_427e8).abs() / 2.828e8 < 1e-6);
        let at = weighting_gradient(&f, &Vector3::new(100e-9, 0.0, 0.0));
        assert_eq!(at.x, -alpha);
        assert!(weighting_gradient(&f, &Vector3::new(1e-6, 0.0, 0.0)).x.abs() < 1e-50);
        assert!(f.potential(&Vector3::zeros()).is_none());
    }

    #[test]
    fn single_electron_parallel_plate_current() {
        let v = speed_from_energy(0.0905, ELECTRON_MASS);
        let f = WeightingField::ParallelPlate { length: LX };
        let i = induced_current(
            &[Vector3::new(50e-9, 0.0, 0.0)],
            &[Vector3::new(v, 0.0, 0.0)],
            &[ELEMENTARY_CHARGE],
            InductionSource::Weighting(&f),
            EPS,
        )
        .unwrap();
        assert!((i - 1.021e-7).abs() / 1.021e-7 < 5e-4, "{i}");
    }

    #[test]
    fn zero_and_cancelling_velocities() {
        let f = WeightingField::ParallelPlate { length: LX };
        let pos = [Vector3::new(100e-9, 0.0, 0.0), Vector3::new(180e-9, 0.0, 0.0)];
        let q = [ELEMENTARY_CHARGE; 2];
        let still = induced_current(&pos, &[Vector3::zeros(); 2], &q, InductionSource::Weighting(&f), EPS).unwrap();
        assert_eq!(still, 0.0);
        let v = [Vector3::new(1e5, 0.0, 0.0), Vector3::new(-1e5, 0.0, 0.0)];
        let i = induced_current(&pos, &v, &q, InductionSource::Weighting(&f), EPS).unwrap();
        assert_eq!(i, 0.0);
    }

    #[test]
    fn mismatched_lists() {
        let f = WeightingField::ParallelPlate { length: LX };
        let r = induced_current(&[Vector3::zeros()], &[], &[1.0], InductionSource::Weighting(&f), EPS);
        assert!(matches!(r, Err(ElectrostaticsError::LengthMismatch { .. })));
    }

    #[test]
    fn parallel_plate_current_is_rate_of_weighting_flux() {
        // X(t) = x0 + v t + a t², compare q·dφ/dt by central differences with q·v(t)/L.
        let f = WeightingField::ParallelPlate { length: LX };
        let q = ELEMENTARY_CHARGE;
        let (x0, v0, acc) = (20e-9, 1.5e5, 3e16);
        let pos = |t: f64| Vector3::new(x0 + v0 * t + acc * t * t, 0.0, 0.0);
        let h = 1e-17;
        for k in 0..10 {
            let t = k as f64 * 1e-13;
            let rate = q * (f.potential(&pos(t + h)).unwrap() - f.potential(&pos(t - h)).unwrap()) / (2.0 * h);
            let v = Vector3::new(v0 + 2.0 * acc * t, 0.0, 0.0);
            let i = induced_current(&[pos(t)], &[v], &[q], InductionSource::Weighting(&f), EPS).unwrap();
            assert!((rate - i).abs() <= 1e-6 * i.abs());
        }
    }

    #[test]
    fn surface_current_is_rate_of_flux() {
        let s = RectSurface::square(Vector3::new(LX, 0.0, 0.0), Axis::X, 3e-6, SurfaceRole::WeakLarge);
        let q = ELEMENTARY_CHARGE;
        let r = Vector3::new(100e-9, 5e-9, -2e-9);
        let v = Vector3::new(1e5, 2e4, -3e4);
        let h = 1e-18;
        let rate = EPS * (flux_rect(&s, &(r + v * h), q, EPS) - flux_rect(&s, &(r - v * h), q, EPS)) / (2.0 * h);
        let i = induced_current(&[r], &[v], &[q], InductionSource::Surface(&s), EPS).unwrap();
        assert!((rate - i).abs() <= 1e-6 * i.abs(), "{rate} {i}");
        assert!(i > 0.0);
    }

    proptest! {
        #[test]
        fn linear_in_particles_and_velocities(
            xs in proptest::collection::vec((0.0..280e-9f64, -1e-8..1e-8f64, -1e5..1e5f64, -1e5..1e5f64), 2..6),
            scale in -3.0..3.0f64,
        ) {
            let s = RectSurface::square(Vector3::new(LX, 0.0, 0.0), Axis::X, 50e-9, SurfaceRole::WeakLarge);
            let pos: Vec<_> = xs.iter().map(|t| Vector3::new(t.0, t.1, 0.0)).collect();
            let vel: Vec<_> = xs.iter().map(|t| Vector3::new(t.2, t.3, 0.0)).collect();
            let q = vec![ELEMENTARY_CHARGE; xs.len()];
            for src in [InductionSource::Surface(&s), InductionSource::Weighting(&WeightingField::exponential_for_area(25e-18, Vector3::new(1e-7, 0.0, 0.0)))] {
                let total = induced_current(&pos, &vel, &q, src, EPS).unwrap();
                let parts: f64 = (0..xs.len())
                    .map(|k| induced_current(&pos[k..=k], &vel[k..=k], &q[k..=k], src, EPS).unwrap())
                    .sum();
                prop_assert!((total - parts).abs() <= 1e-12 * parts.abs().max(1e-30));
                let scaled: Vec<_> = vel.iter().map(|v| v * scale).collect();
                let st = induced_current(&pos, &scaled, &q, src, EPS).unwrap();
                prop_assert!((st - scale * total).abs() <= 1e-12 * total.abs().max(1e-30));
            }
        }
    }
}
