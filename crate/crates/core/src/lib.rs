//! Weak measurements of displacement current and reconstruction of Bohmian
//! velocities from postselected weak values.

pub mod constants;
pub mod electrostatics;
pub mod measurement;
pub mod oracle;
pub mod probe;
pub mod quadrature;
pub mod quantum;
pub mod stats;
pub mod weak_value;
