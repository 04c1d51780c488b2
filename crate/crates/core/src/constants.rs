//! Physical constants (CODATA 2018, SI) and unit helpers.

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const ELECTRON_VOLT: f64 = ELEMENTARY_CHARGE;

pub const NANOMETER: f64 = 1e-9;
pub const PICOSECOND: f64 = 1e-12;
pub const FEMTOSECOND: f64 = 1e-15;
pub const TERAHERTZ: f64 = 1e12;

/// Speed of a non-relativistic particle with the given kinetic energy.
pub fn speed_from_energy(energy_ev: f64, mass: f64) -> f64 {
    (2.0 * energy_ev * ELECTRON_VOLT / mass).sqrt()
}

/// Inverse of [`speed_from_energy`].
pub fn energy_from_speed(speed: f64, mass: f64) -> f64 {
    0.5 * mass * speed * speed / ELECTRON_VOLT
}

/// Coulomb prefactor q1 q2 / (4π ε).
pub fn coulomb_factor(q1: f64, q2: f64, permittivity: f64) -> f64 {
    q1 * q2 / (4.0 * std::f64::consts::PI * permittivity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_packet_speed() {
        let v = speed_from_energy(0.0905, ELECTRON_MASS);
        assert!((v - 1.784e5).abs() / 1.784e5 < 5e-4);
        assert!((energy_from_speed(v, ELECTRON_MASS) - 0.0905).abs() < 1e-15);
    }
}
