use crate::electrostatics::{flux_gradient, flux_rect, RectSurface};

use super::ProbeElectron;

/// Σ_k ε ∇Φ(X_k)·v_k over probe electrons of charge `charge`.
pub fn probe_current_contribution(
    electrons: &[ProbeElectron],
    surface: &RectSurface,
    charge: f64,
    permittivity: f64,
) -> f64 {
    electrons
        .iter()
        .map(|e| permittivity * flux_gradient(surface, &e.position, charge, permittivity).dot(&e.velocity))
        .sum()
}

/// Total flux Σ_k Φ(X_k) of the probe electrons through `surface`.
pub fn probe_flux(electrons: &[ProbeElectron], surface: &RectSurface, charge: f64, permittivity: f64) -> f64 {
    electrons.iter().map(|e| flux_rect(surface, &e.position, charge, permittivity)).sum()
}
