//! Simulation of a DC motor driving a variable-pitch propeller, with a PID
//! thrust loop and online pitch-angle hill climbing that minimizes electrical
//! power at a commanded thrust.
//!
//! The crate is organized bottom-up:
//!
//! * [`propeller`]: blade-element thrust/torque/power and the implicit speed solvers.
//! * [`motor`]: armature and shaft dynamics, fixed-step RK4 integration.
//! * [`control`]: PID thrust controller, ramp commands and sensor calibration.
//! * [`plant`]: the `set_propeller` port and its simulated implementations.
//! * [`optimizer`]: fixed-step and variable-step pitch hill climbing.
//! * [`config`]: the flat `key = value` parameter file.

pub mod config;
pub mod control;
pub mod error;
pub mod motor;
pub mod optimizer;
pub mod plant;
pub mod propeller;
mod roots;

pub use error::ParamError;

/// Degrees to radians.
#[inline]
pub fn deg(value: f64) -> f64 {
    value.to_radians()
}
