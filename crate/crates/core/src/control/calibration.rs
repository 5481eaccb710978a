//! Affine sensor and actuator calibrations of the test rig.

use crate::error::{finite, require, ParamError};

/// `y = scale·x + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineMap {
    pub fn new(scale: f64, offset: f64) -> Result<Self, ParamError> {
        finite(scale, "calibration scale")?;
        finite(offset, "calibration offset")?;
        require(scale != 0.0, "calibration scale", "must be non-zero")?;
        Ok(Self { scale, offset })
    }

    /// Factored so that `apply(invert(0.0))` is exactly zero.
    pub fn apply(&self, raw: f64) -> f64 {
        self.scale * (raw + self.offset / self.scale)
    }

    pub fn invert(&self, value: f64) -> f64 {
        (value - self.offset) / self.scale
    }
}

/// Sensor and servo calibrations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Analog reading → supply voltage (V).
    pub supply_voltage: AffineMap,
    /// Analog reading → motor current (mA).
    pub current: AffineMap,
    /// Load-cell output voltage → thrust (N).
    pub thrust: AffineMap,
    /// Servo command → pitch angle (deg).
    pub pitch: AffineMap,
}

impl Calibration {
    /// Regression constants measured on the rig.
    pub fn rig() -> Self {
        Self {
            supply_voltage: AffineMap {
                scale: 0.0202,
                offset: -0.0237,
            },
            current: AffineMap {
                scale: 4.1532,
                offset: -1826.67,
            },
            // T = 9.81·(4.11·v_out − 49.36)/1000
            thrust: AffineMap {
                scale: 9.81 * 4.11 / 1000.0,
                offset: -9.81 * 49.36 / 1000.0,
            },
            // β = 0.59·(v_servo − 135)
            pitch: AffineMap {
                scale: 0.59,
                offset: -0.59 * 135.0,
            },
        }
    }

    pub fn supply_voltage(&self, raw: f64) -> f64 {
        self.supply_voltage.apply(raw)
    }

    pub fn current_ma(&self, raw: f64) -> f64 {
        self.current.apply(raw)
    }

    pub fn thrust(&self, load_cell_volts: f64) -> f64 {
        self.thrust.apply(load_cell_volts)
    }

    pub fn pitch_deg(&self, servo: f64) -> f64 {
        self.pitch.apply(servo)
    }

    /// Servo command for a pitch angle in degrees.
    pub fn servo_for_pitch(&self, pitch_deg: f64) -> f64 {
        self.pitch.invert(pitch_deg)
    }

    /// Load-cell voltage that reads as `thrust`.
    pub fn load_cell_for_thrust(&self, thrust: f64) -> f64 {
        self.thrust.invert(thrust)
    }
}

impl Default for Calibration {
    fn default() -> Self {
        Self::rig()
    }
}
