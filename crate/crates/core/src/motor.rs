//! Armature circuit and shaft dynamics of a brushed-equivalent DC motor
//! loaded by the propeller torque.
//!
//! ```text
//! dω/dt = (k_b i − B₁ ω − Q(ω, β)) / I_m
//! di/dt = (v − R i − k_b ω) / L
//! ```

use std::f64::consts::PI;

use thiserror::Error;

use crate::error::{finite, require, ParamError};
use crate::propeller::{Environment, OperatingPoint, Propeller};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorParams {
    /// Rotor + propeller inertia, kg·m².
    pub inertia: f64,
    /// Back-emf / torque constant, V·s/rad.
    pub emf_constant: f64,
    /// Viscous friction, N·m·s/rad.
    pub viscous_friction: f64,
    /// Ohm
    pub resistance: f64,
    /// H
    pub inductance: f64,
    /// Supply voltage limit, V.
    pub voltage_limit: f64,
}

impl MotorParams {
    pub fn new(
        inertia: f64,
        emf_constant: f64,
        viscous_friction: f64,
        resistance: f64,
        inductance: f64,
        voltage_limit: f64,
    ) -> Result<Self, ParamError> {
        let p = Self {
            inertia,
            emf_constant,
            viscous_friction,
            resistance,
            inductance,
            voltage_limit,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        finite(self.inertia, "inertia_kgm2")?;
        finite(self.emf_constant, "emf_constant")?;
        finite(self.viscous_friction, "viscous_friction")?;
        finite(self.resistance, "resistance_ohm")?;
        finite(self.inductance, "inductance_h")?;
        finite(self.voltage_limit, "voltage_limit_v")?;
        require(self.inertia > 0.0, "inertia_kgm2", "must be positive")?;
        require(self.emf_constant > 0.0, "emf_constant", "must be positive")?;
        require(
            self.viscous_friction >= 0.0,
            "viscous_friction",
            "must be non-negative",
        )?;
        require(self.resistance > 0.0, "resistance_ohm", "must be positive")?;
        require(self.inductance > 0.0, "inductance_h", "must be positive")?;
        require(
            self.voltage_limit > 0.0,
            "voltage_limit_v",
            "must be positive",
        )
    }

    /// Small 1200 Kv outrunner on a 12 V supply. Invented values apart from Kv.
    pub fn reference() -> Self {
        Self {
            inertia: 2e-5,
            emf_constant: 7.96e-3,
            viscous_friction: 5e-6,
            resistance: 0.5,
            inductance: 5e-4,
            voltage_limit: 12.0,
        }
    }
}

impl Default for MotorParams {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorState {
    /// Shaft speed, rad/s.
    pub omega: f64,
    /// Armature current, A.
    pub current: f64,
}

impl MotorState {
    pub fn new(omega: f64, current: f64) -> Self {
        Self { omega, current }
    }

    pub fn rps(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn rpm(&self) -> f64 {
        self.omega * 30.0 / PI
    }

    pub fn is_finite(&self) -> bool {
        self.omega.is_finite() && self.current.is_finite()
    }

    /// The shaft is turning backwards.
    pub fn is_reversed(&self) -> bool {
        self.omega < 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub omega_dot: f64,
    pub current_dot: f64,
}

/// Right-hand sides of the shaft and armature equations.
pub fn derivatives(
    state: MotorState,
    v_in: f64,
    load_torque: f64,
    params: &MotorParams,
) -> StateDerivative {
    let MotorState { omega, current } = state;
    StateDerivative {
        omega_dot: (params.emf_constant * current - params.viscous_friction * omega - load_torque)
            / params.inertia,
        current_dot: (v_in - params.resistance * current - params.emf_constant * omega)
            / params.inductance,
    }
}

pub fn electrical_power(v_in: f64, current: f64) -> f64 {
    v_in * current
}

/// Shaft load as a function of speed (rad/s) and pitch (rad).
pub trait LoadTorque {
    fn torque(&self, omega: f64, pitch: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64> LoadTorque for F {
    fn torque(&self, omega: f64, pitch: f64) -> f64 {
        self(omega, pitch)
    }
}

/// Propeller aerodynamic torque in a fixed environment.
#[derive(Debug, Clone, Copy)]
pub struct PropellerLoad<'a> {
    pub propeller: &'a Propeller,
    pub env: Environment,
}

impl LoadTorque for PropellerLoad<'_> {
    /// Reverse rotation mirrors the forward torque.
    fn torque(&self, omega: f64, pitch: f64) -> f64 {
        let rps = omega.abs() / (2.0 * PI);
        let q = self
            .propeller
            .torque(&self.env, OperatingPoint::new(rps, pitch));
        if omega < 0.0 {
            -q
        } else {
            q
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MotorError {
    #[error("motor state diverged (omega = {omega}, current = {current})")]
    Diverged { omega: f64, current: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

/// One classical RK4 step with the input voltage held over the step.
///
/// `v_in` is clamped to `[0, voltage_limit]`; the load torque is re-evaluated
/// at every stage.
pub fn step<L: LoadTorque + ?Sized>(
    state: MotorState,
    v_in: f64,
    pitch: f64,
    dt: f64,
    params: &MotorParams,
    load: &L,
) -> Result<MotorState, MotorError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(MotorError::InvalidStep(dt));
    }
    let v = v_in.clamp(0.0, params.voltage_limit);
    let f = |s: MotorState| derivatives(s, v, load.torque(s.omega, pitch), params);
    let shifted = |s: MotorState, d: StateDerivative, h: f64| MotorState {
        omega: s.omega + h * d.omega_dot,
        current: s.current + h * d.current_dot,
    };

    let k1 = f(state);
    let k2 = f(shifted(state, k1, 0.5 * dt));
    let k3 = f(shifted(state, k2, 0.5 * dt));
    let k4 = f(shifted(state, k3, dt));
    let next = MotorState {
        omega: state.omega
            + dt / 6.0 * (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot),
        current: state.current
            + dt / 6.0
                * (k1.current_dot + 2.0 * k2.current_dot + 2.0 * k3.current_dot + k4.current_dot),
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(MotorError::Diverged {
            omega: next.omega,
            current: next.current,
        })
    }
}

/// Steady operating point for a given shaft speed: the current that balances
/// the load and the voltage that drives it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub omega: f64,
    pub current: f64,
    pub voltage: f64,
}

impl Equilibrium {
    pub fn at_speed(omega: f64, load_torque: f64, params: &MotorParams) -> Self {
        let current = (load_torque + params.viscous_friction * omega) / params.emf_constant;
        Self {
            omega,
            current,
            voltage: params.resistance * current + params.emf_constant * omega,
        }
    }

    pub fn power(&self) -> f64 {
        electrical_power(self.voltage, self.current)
    }
}
