//! Thrust loop: saturated ramp commands and a PID controller producing the
//! motor voltage.

pub mod calibration;

pub use calibration::{AffineMap, Calibration};

use crate::error::{finite, require, ParamError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    /// V per N of thrust error.
    pub kp: f64,
    /// V per N·s.
    pub ki: f64,
    /// V·s per N.
    pub kd: f64,
    /// Bound on the integral contribution, V.
    pub integral_limit: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64, integral_limit: f64) -> Result<Self, ParamError> {
        let g = Self {
            kp,
            ki,
            kd,
            integral_limit,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (v, name) in [(self.kp, "kp"), (self.ki, "ki"), (self.kd, "kd")] {
            finite(v, name)?;
            require(v >= 0.0, name, "gains must be non-negative")?;
        }
        finite(self.integral_limit, "integral_limit_v")?;
        require(
            self.integral_limit > 0.0,
            "integral_limit_v",
            "must be positive",
        )
    }

    /// Gains picked by `examples/tune_gains.rs` on the reference plant.
    pub fn reference() -> Self {
        Self {
            kp: 8.0,
            ki: 640.0,
            kd: 0.0,
            integral_limit: 12.0,
        }
    }
}

impl Default for PidGains {
    fn default() -> Self {
        Self::reference()
    }
}

/// Positional PID with a clamped, conditionally-integrated integral term and
/// derivative on measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct PidController {
    gains: PidGains,
    integral: f64,
    last_measurement: Option<f64>,
}

/// What one controller update produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidOutput {
    /// Output after clamping to `[0, limit]`.
    pub value: f64,
    /// Unclamped request.
    pub requested: f64,
}

impl PidOutput {
    /// The upper clamp is active.
    pub fn at_upper_limit(&self, limit: f64) -> bool {
        self.requested >= limit
    }
}

impl PidController {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            last_measurement: None,
        }
    }

    pub fn gains(&self) -> &PidGains {
        &self.gains
    }

    /// Integral contribution, V.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.last_measurement = None;
    }

    /// Advances the controller by `dt` and returns the voltage command,
    /// clamped to `[0, limit]`.
    pub fn step(&mut self, setpoint: f64, measurement: f64, dt: f64, limit: f64) -> PidOutput {
        let g = self.gains;
        let error = setpoint - measurement;
        let derivative = match self.last_measurement {
            Some(prev) if dt > 0.0 => (measurement - prev) / dt,
            _ => 0.0,
        };
        self.last_measurement = Some(measurement);

        let rest = g.kp * error - g.kd * derivative;
        let candidate =
            (self.integral + g.ki * error * dt).clamp(-g.integral_limit, g.integral_limit);
        let requested = rest + candidate;
        // integrate no further than the point where the output meets the clamp
        self.integral = if requested > limit && error > 0.0 {
            candidate.min((limit - rest).max(self.integral))
        } else if requested < 0.0 && error < 0.0 {
            candidate.max((-rest).min(self.integral))
        } else {
            candidate
        };
        let requested = g.kp * error + self.integral - g.kd * derivative;
        PidOutput {
            value: requested.clamp(0.0, limit.max(0.0)),
            requested,
        }
    }
}

/// Thrust command ramping linearly from `start` to `target` over `duration`,
/// then holding `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampCommand {
    /// N
    pub start: f64,
    /// N
    pub target: f64,
    /// s
    pub duration: f64,
}

impl RampCommand {
    /// Ramp from rest.
    pub fn new(target: f64, duration: f64) -> Result<Self, ParamError> {
        Self::between(0.0, target, duration)
    }

    pub fn between(start: f64, target: f64, duration: f64) -> Result<Self, ParamError> {
        finite(start, "ramp_start")?;
        finite(target, "thrust")?;
        require(target >= 0.0, "thrust", "must be non-negative")?;
        require(
            duration > 0.0 && duration.is_finite(),
            "ramp_duration_s",
            "must be positive",
        )?;
        Ok(Self {
            start,
            target,
            duration,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        ramp_value(self, t)
    }
}

/// `start + (target − start)·min(1, t/duration)`; for a ramp from rest this is
/// `min(target, target·t/duration)`.
pub fn ramp_value(cmd: &RampCommand, t: f64) -> f64 {
    let frac = (t.max(0.0) / cmd.duration).min(1.0);
    if frac >= 1.0 {
        cmd.target
    } else {
        cmd.start + (cmd.target - cmd.start) * frac
    }
}
