//! Electric flux of point charges through rectangular sensing surfaces,
//! Ramo–Shockley weighting fields, induced currents and the classical-field check.

mod classical;
mod flux;
mod geometry;
mod surface;
mod weighting;

pub use classical::{
    classicality_margin, classicality_threshold, mean_field_from_flux, ClassicalityVerdict, DEFAULT_CLASSICALITY_RATIO,
};
pub use flux::{
    flux_gradient, flux_large_surface, flux_off_axis_quadrature, flux_on_axis_exact, flux_rect, flux_small_surface,
    solid_angle,
};
pub use geometry::{Aabb, DeviceGeometry, GeometryParams, GeometryViolation};
pub use surface::{Axis, RectSurface, SurfaceRole};
pub use weighting::{induced_current, weighting_gradient, InductionSource, WeightingField};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElectrostaticsError {
    #[error("surface is not square ({a:e} m × {b:e} m)")]
    NotSquare { a: f64, b: f64 },
    #[error("particle lies {distance:e} m from the surface plane, inside one quadrature cell")]
    TooClose { distance: f64 },
    #[error("{regime} asymptotic form invalid: S/χ² = {ratio:e}")]
    AsymptoticInvalid { regime: &'static str, ratio: f64 },
    #[error("quadrature did not converge (error estimate {error:e})")]
    NotConverged { error: f64 },
    #[error("{positions} positions, {velocities} velocities and {charges} charges do not align")]
    LengthMismatch { positions: usize, velocities: usize, charges: usize },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("time interval {dt:e} s must be positive")]
    InvalidInterval { dt: f64 },
}
