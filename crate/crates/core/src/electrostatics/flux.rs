use std::f64::consts::PI;

use nalgebra::Vector3;

use super::{ElectrostaticsError, RectSurface};
use crate::quadrature::integrate;

/// S/χ² below which the large-surface expansion is refused.
const LARGE_SURFACE_MIN_RATIO: f64 = 100.0;
/// ξ = S/(2χ²) above which the small-surface expansion is refused.
const SMALL_SURFACE_MAX_XI: f64 = 0.1;

fn corner_term(chi: f64, u: f64, w: f64) -> f64 {
    let r = (chi * chi + u * u + w * w).sqrt();
    (u * w / (chi * r)).atan()
}

/// Signed solid angle subtended by the rectangle, seen from `p`.
///
/// Positive when `p` lies on the side opposite to the normal. On the plane
/// itself the one-sided limit 2π is used inside the rectangle and 0 outside.
pub fn solid_angle(surface: &RectSurface, p: &Vector3<f64>) -> f64 {
    let chi = surface.chi(p);
    let (u, w) = surface.relative_bounds(p);
    if chi == 0.0 {
        let inside = u[0] < 0.0 && u[1] > 0.0 && w[0] < 0.0 && w[1] > 0.0;
        return if inside { 2.0 * PI } else { 0.0 };
    }
    corner_term(chi, u[1], w[1]) - corner_term(chi, u[0], w[1]) - corner_term(chi, u[1], w[0])
        + corner_term(chi, u[0], w[0])
}

/// Flux of the field of a point charge at `p` through the surface, along its normal.
pub fn flux_rect(surface: &RectSurface, p: &Vector3<f64>, charge: f64, permittivity: f64) -> f64 {
    charge * solid_angle(surface, p) / (4.0 * PI * permittivity)
}

/// Gradient of [`flux_rect`] with respect to the charge position.
pub fn flux_gradient(surface: &RectSurface, p: &Vector3<f64>, charge: f64, permittivity: f64) -> Vector3<f64> {
    let chi = surface.chi(p);
    let (u, w) = surface.relative_bounds(p);
    let (mut d_chi, mut d_u, mut d_w) = (0.0, 0.0, 0.0);
    for (i, &ui) in u.iter().enumerate() {
        for (j, &wj) in w.iter().enumerate() {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let r = (chi * chi + ui * ui + wj * wj).sqrt();
            let cu = chi * chi + ui * ui;
            let cw = chi * chi + wj * wj;
            if cu > 0.0 && cw > 0.0 {
                d_chi -= sign * ui * wj * (r * r + chi * chi) / (r * cu * cw);
            }
            if cu > 0.0 {
                d_u += sign * wj * chi / (r * cu);
            }
            if cw > 0.0 {
                d_w += sign * ui * chi / (r * cw);
            }
        }
    }
    // χ, u and w all decrease when the charge moves along the matching axis.
    let scale = -charge / (4.0 * PI * permittivity);
    let (a, b) = surface.normal.transverse();
    let mut g = Vector3::zeros();
    g[surface.normal.index()] = scale * d_chi;
    g[a.index()] = scale * d_u;
    g[b.index()] = scale * d_w;
    g
}

/// Closed-form flux through a square surface for a charge on its axis at `x`
/// (coordinate along the surface normal).
pub fn flux_on_axis_exact(
    x: f64,
    surface: &RectSurface,
    charge: f64,
    permittivity: f64,
) -> Result<f64, ElectrostaticsError> {
    if !surface.is_square() {
        return Err(ElectrostaticsError::NotSquare { a: surface.extent_a, b: surface.extent_b });
    }
    let s = surface.area();
    let chi = surface.plane() - x;
    if chi == 0.0 {
        return Ok(charge / (2.0 * permittivity));
    }
    let c = chi.abs();
    let value = charge / (PI * permittivity) * (s / (4.0 * c * (c * c + 0.5 * s).sqrt())).atan();
    Ok(if chi > 0.0 { value } else { -value })
}

/// Direct 2D adaptive quadrature of E·n over the surface.
pub fn flux_off_axis_quadrature(
    p: &Vector3<f64>,
    surface: &RectSurface,
    charge: f64,
    permittivity: f64,
) -> Result<f64, ElectrostaticsError> {
    let chi = surface.chi(p);
    let (u, w) = surface.relative_bounds(p);
    let cell = 1e-9 * surface.extent_a.min(surface.extent_b);
    if chi.abs() <= cell {
        return Err(ElectrostaticsError::TooClose { distance: chi.abs() });
    }
    let split = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        if lo < 0.0 && hi > 0.0 {
            vec![(lo, 0.0), (0.0, hi)]
        } else {
            vec![(lo, hi)]
        }
    };
    let c2 = chi * chi;
    let mut worst = 0.0_f64;
    let mut failed = false;
    let mut outer = |a: f64| -> f64 {
        let mut sum = 0.0;
        for (lo, hi) in split(w[0], w[1]) {
            let r = integrate(|b| (c2 + a * a + b * b).powf(-1.5), lo, hi, 1e-13, 0.0, 2000);
            failed |= !r.converged;
            worst = worst.max(r.error / r.value.abs().max(f64::MIN_POSITIVE));
            sum += r.value;
        }
        sum
    };
    let mut total = 0.0;
    let mut outer_ok = true;
    let mut outer_err = 0.0;
    for (lo, hi) in split(u[0], u[1]) {
        let r = integrate(&mut outer, lo, hi, 1e-12, 0.0, 2000);
        outer_ok &= r.converged;
        outer_err += r.error;
        total += r.value;
    }
    if failed || !outer_ok {
        return Err(ElectrostaticsError::NotConverged { error: (outer_err / total.abs()).max(worst) });
    }
    Ok(charge * chi * total / (4.0 * PI * permittivity))
}

/// Linear expansion valid when the surface is much larger than the distance to it.
pub fn flux_large_surface(
    x: f64,
    surface: &RectSurface,
    charge: f64,
    permittivity: f64,
) -> Result<f64, ElectrostaticsError> {
    let s = surface.area();
    let chi = surface.plane() - x;
    let ratio = s / (chi * chi);
    if ratio < LARGE_SURFACE_MIN_RATIO {
        return Err(ElectrostaticsError::AsymptoticInvalid { regime: "large-surface", ratio });
    }
    let side = if chi < 0.0 { -1.0 } else { 1.0 };
    Ok(side * charge / (PI * permittivity) * (0.5 * PI - 2.0 * (2.0 / s).sqrt() * chi.abs()))
}

/// Inverse-square far form valid when the surface is much smaller than the distance to it.
pub fn flux_small_surface(
    x: f64,
    surface: &RectSurface,
    charge: f64,
    permittivity: f64,
) -> Result<f64, ElectrostaticsError> {
    let s = surface.area();
    let chi = surface.plane() - x;
    let xi = s / (2.0 * chi * chi);
    if !(xi <= SMALL_SURFACE_MAX_XI) {
        return Err(ElectrostaticsError::AsymptoticInvalid { regime: "small-surface", ratio: s / (chi * chi) });
    }
    Ok(charge * s / (4.0 * PI * permittivity * chi * chi.abs()))
}
