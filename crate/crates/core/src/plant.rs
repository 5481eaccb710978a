//! The `set_propeller(β, T_c)` port used by the pitch optimizers and its
//! implementations.
//!
//! [`SimulatedPlant`] closes the PID thrust loop around the motor and
//! propeller models and integrates it in time. The controller runs at a fixed
//! control period with its voltage held between samples; the motor is
//! integrated with RK4 substeps that divide that period. [`SteadyStatePlant`]
//! returns the algebraic equilibrium of the same system, and
//! [`ScriptedPlant`] replays predetermined measurements.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::control::{Calibration, PidController, PidGains, RampCommand};
use crate::error::{finite, require, ParamError};
use crate::motor::{self, Equilibrium, MotorError, MotorParams, MotorState, PropellerLoad};
use crate::propeller::{Environment, OperatingPoint, Propeller, SolveError};

/// Absolute floor on the settle band, N.
pub const MIN_SETTLE_BAND: f64 = 1e-3;
/// Relative margin below the supply cap that still counts as pinned; the cap
/// moves with shaft speed, so an exact compare flickers.
pub const CEILING_MARGIN: f64 = 1e-3;
const TIME_EPS: f64 = 1e-9;

/// What one `set_propeller` call reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettledMeasurement {
    /// Mean electrical power over the measurement window, W.
    pub power: f64,
    /// Mean measured thrust over the window, N.
    pub thrust: f64,
    /// Mean shaft speed over the window, rev/s.
    pub rps: f64,
    /// The voltage or power ceiling held the controller back.
    pub saturated: bool,
    /// Simulated time spent in the call, s.
    pub settle_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantLimits {
    /// Supply power ceiling, W.
    pub power_ceiling: f64,
    /// Pitch actuator range, rad.
    pub beta_min: f64,
    pub beta_max: f64,
    /// Settle band as a fraction of the commanded thrust.
    pub settle_tolerance: f64,
    /// Dwell inside the band before measuring, s.
    pub settle_window: f64,
    /// Give up after this much simulated time per call, s.
    pub timeout: f64,
}

impl PlantLimits {
    pub fn reference() -> Self {
        Self {
            power_ceiling: 14.0,
            beta_min: (-5f64).to_radians(),
            beta_max: 25f64.to_radians(),
            settle_tolerance: 0.02,
            settle_window: 0.5,
            timeout: 20.0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        finite(self.power_ceiling, "power_ceiling_w")?;
        require(
            self.power_ceiling > 0.0,
            "power_ceiling_w",
            "must be positive",
        )?;
        finite(self.beta_min, "beta_min_deg")?;
        finite(self.beta_max, "beta_max_deg")?;
        require(
            self.beta_min < self.beta_max,
            "beta_max_deg",
            "must exceed beta_min_deg",
        )?;
        require(
            self.settle_tolerance > 0.0 && self.settle_tolerance < 1.0,
            "settle_tolerance",
            "must lie in (0, 1)",
        )?;
        require(
            self.settle_window > 0.0 && self.settle_window.is_finite(),
            "settle_window_s",
            "must be positive",
        )?;
        require(
            self.timeout > self.settle_window && self.timeout.is_finite(),
            "timeout_s",
            "must exceed the settle window",
        )
    }

    pub fn contains(&self, beta: f64) -> bool {
        beta >= self.beta_min - 1e-12 && beta <= self.beta_max + 1e-12
    }

    pub fn clamp(&self, beta: f64) -> f64 {
        beta.clamp(self.beta_min, self.beta_max)
    }

    /// Allowed thrust deviation around `thrust` once settled.
    pub fn settle_band(&self, thrust: f64) -> f64 {
        (self.settle_tolerance * thrust).max(MIN_SETTLE_BAND)
    }
}

impl Default for PlantLimits {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("pitch {beta_deg:.3}° outside actuator range [{min_deg:.3}°, {max_deg:.3}°]")]
    BetaOutOfRange {
        beta_deg: f64,
        min_deg: f64,
        max_deg: f64,
    },
    #[error("commanded thrust must be finite and non-negative, got {0}")]
    InvalidThrust(f64),
    #[error("thrust did not settle at {thrust} N (pitch {beta_deg:.3}°) within {timeout} s; check the PID gains")]
    NoSettle {
        beta_deg: f64,
        thrust: f64,
        timeout: f64,
    },
    #[error(transparent)]
    Motor(#[from] MotorError),
    #[error(transparent)]
    Model(#[from] SolveError),
}

/// A device that holds a commanded thrust at a commanded pitch and reports
/// the settled electrical power.
pub trait PropellerPort {
    fn limits(&self) -> &PlantLimits;

    fn set_propeller(&mut self, beta: f64, thrust: f64) -> Result<SettledMeasurement, PlantError>;

    /// Cumulative plant time, s.
    fn elapsed(&self) -> f64;
}

impl<P: PropellerPort + ?Sized> PropellerPort for &mut P {
    fn limits(&self) -> &PlantLimits {
        (**self).limits()
    }

    fn set_propeller(&mut self, beta: f64, thrust: f64) -> Result<SettledMeasurement, PlantError> {
        (**self).set_propeller(beta, thrust)
    }

    fn elapsed(&self) -> f64 {
        (**self).elapsed()
    }
}

fn check_request(limits: &PlantLimits, beta: f64, thrust: f64) -> Result<(), PlantError> {
    if !(beta.is_finite() && limits.contains(beta)) {
        return Err(PlantError::BetaOutOfRange {
            beta_deg: beta.to_degrees(),
            min_deg: limits.beta_min.to_degrees(),
            max_deg: limits.beta_max.to_degrees(),
        });
    }
    if !(thrust.is_finite() && thrust >= 0.0) {
        return Err(PlantError::InvalidThrust(thrust));
    }
    Ok(())
}

/// Integration and control rates of the simulated loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimTiming {
    /// RK4 step, s.
    pub dt: f64,
    /// Controller sample period, s; an integer multiple of `dt`.
    pub control_period: f64,
    /// Duration of the thrust ramp issued by each `set_propeller`, s.
    pub ramp_duration: f64,
}

impl SimTiming {
    pub fn reference() -> Self {
        Self {
            dt: 1e-4,
            control_period: 1e-3,
            ramp_duration: 1.6,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        require(
            self.dt > 0.0 && self.dt.is_finite(),
            "dt_s",
            "must be positive",
        )?;
        require(
            self.control_period >= self.dt && self.control_period.is_finite(),
            "control_period_s",
            "must be at least dt_s",
        )?;
        let ratio = self.control_period / self.dt;
        require(
            (ratio - ratio.round()).abs() <= 1e-9 * ratio,
            "control_period_s",
            "must be an integer multiple of dt_s",
        )?;
        require(
            self.ramp_duration > 0.0 && self.ramp_duration.is_finite(),
            "ramp_duration_s",
            "must be positive",
        )
    }

    pub fn substeps(&self) -> usize {
        (self.control_period / self.dt).round() as usize
    }
}

impl Default for SimTiming {
    fn default() -> Self {
        Self::reference()
    }
}

/// Everything needed to build a simulated plant.
#[derive(Debug, Clone)]
pub struct PlantConfig {
    pub propeller: Propeller,
    pub environment: Environment,
    pub motor: MotorParams,
    pub gains: PidGains,
    pub calibration: Calibration,
    pub limits: PlantLimits,
    pub timing: SimTiming,
    /// Half-width of the uniform thrust measurement noise, N. Zero disables it.
    pub noise: f64,
    pub seed: u64,
}

impl PlantConfig {
    pub fn reference() -> Self {
        Self {
            propeller: Propeller::reference(),
            environment: Environment::sea_level_static(),
            motor: MotorParams::reference(),
            gains: PidGains::reference(),
            calibration: Calibration::rig(),
            limits: PlantLimits::reference(),
            timing: SimTiming::reference(),
            noise: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        self.motor.validate()?;
        self.gains.validate()?;
        self.limits.validate()?;
        self.timing.validate()?;
        finite(self.noise, "noise_n")?;
        require(self.noise >= 0.0, "noise_n", "must be non-negative")
    }

    /// Largest voltage the supply delivers at shaft speed `omega` without
    /// exceeding either the voltage limit or the steady-state power ceiling
    /// `v·(v − k_b ω)/R ≤ P_max`.
    pub fn voltage_cap(&self, omega: f64) -> f64 {
        let m = &self.motor;
        let emf = m.emf_constant * omega;
        let v_power =
            0.5 * (emf + (emf * emf + 4.0 * m.resistance * self.limits.power_ceiling).sqrt());
        v_power.min(m.voltage_limit)
    }
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self::reference()
    }
}

/// One controller period of the simulated loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetrySample {
    /// Plant time at the end of the period, s.
    pub time: f64,
    pub beta: f64,
    /// Commanded thrust, N.
    pub thrust_command: f64,
    /// Measured thrust sampled at the start of the period, N.
    pub thrust_measured: f64,
    /// Shaft speed at the end of the period, rpm.
    pub rpm: f64,
    /// Voltage held over the period, V.
    pub voltage: f64,
    /// Armature current at the end of the period, A.
    pub current: f64,
    /// Mean electrical power over the period, W.
    pub power: f64,
    /// The controller asked for more than the supply cap.
    pub at_ceiling: bool,
}

type TelemetrySink = Box<dyn FnMut(&TelemetrySample) + Send>;

/// Closed-loop time-domain simulation of motor, propeller and PID.
///
/// State (shaft speed, current, controller memory, clock) persists across
/// `set_propeller` calls.
pub struct SimulatedPlant {
    config: PlantConfig,
    state: MotorState,
    pid: PidController,
    beta: f64,
    time: f64,
    last_measured: f64,
    rng: ChaCha8Rng,
    telemetry: Option<TelemetrySink>,
}

impl fmt::Debug for SimulatedPlant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimulatedPlant")
            .field("state", &self.state)
            .field("beta", &self.beta)
            .field("time", &self.time)
            .finish_non_exhaustive()
    }
}

#[derive(Default)]
struct Window {
    ticks: usize,
    power: f64,
    thrust: f64,
    rps: f64,
    all_at_ceiling: bool,
}

impl Window {
    fn push(&mut self, s: &TelemetrySample) {
        if self.ticks == 0 {
            self.all_at_ceiling = true;
        }
        self.ticks += 1;
        self.power += s.power;
        self.thrust += s.thrust_measured;
        self.rps += s.rpm / 60.0;
        self.all_at_ceiling &= s.at_ceiling;
    }

    fn clear(&mut self) {
        *self = Self::default();
    }

    fn measurement(&self, saturated: bool, settle_time: f64) -> SettledMeasurement {
        let n = self.ticks as f64;
        SettledMeasurement {
            power: self.power / n,
            thrust: self.thrust / n,
            rps: self.rps / n,
            saturated,
            settle_time,
        }
    }
}

impl SimulatedPlant {
    pub fn new(config: PlantConfig) -> Result<Self, ParamError> {
        config.validate()?;
        Ok(Self {
            pid: PidController::new(config.gains),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            beta: 0.0,
            state: MotorState::default(),
            time: 0.0,
            last_measured: 0.0,
            telemetry: None,
            config,
        })
    }

    pub fn reference() -> Self {
        Self::new(PlantConfig::reference()).expect("reference plant is valid")
    }

    /// Back to rest with a fresh controller and noise stream.
    pub fn reset(&mut self) {
        self.state = MotorState::default();
        self.pid.reset();
        self.time = 0.0;
        self.last_measured = 0.0;
        self.rng = ChaCha8Rng::seed_from_u64(self.config.seed);
    }

    /// Calls `sink` once per controller period.
    pub fn set_telemetry<F>(&mut self, sink: F)
    where
        F: FnMut(&TelemetrySample) + Send + 'static,
    {
        self.telemetry = Some(Box::new(sink));
    }

    pub fn clear_telemetry(&mut self) {
        self.telemetry = None;
    }

    pub fn config(&self) -> &PlantConfig {
        &self.config
    }

    pub fn state(&self) -> MotorState {
        self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Moves the pitch actuator.
    pub fn set_pitch(&mut self, beta: f64) -> Result<(), PlantError> {
        check_request(&self.config.limits, beta, 0.0)?;
        self.beta = beta;
        Ok(())
    }

    /// Model thrust at the current state; reverse rotation mirrors it.
    pub fn true_thrust(&self) -> f64 {
        let rps = self.state.omega.abs() / (2.0 * PI);
        let t = self.config.propeller.thrust(
            &self.config.environment,
            OperatingPoint::new(rps, self.beta),
        );
        if self.state.omega < 0.0 {
            -t
        } else {
            t
        }
    }

    /// Load-cell reading: model thrust plus noise, through the calibration.
    fn measure_thrust(&mut self) -> f64 {
        let mut t = self.true_thrust();
        if self.config.noise > 0.0 {
            t += self.rng.gen_range(-self.config.noise..=self.config.noise);
        }
        let cal = &self.config.calibration;
        cal.thrust(cal.load_cell_for_thrust(t))
    }

    /// Runs one controller period tracking `thrust_command`.
    pub fn tick(&mut self, thrust_command: f64) -> Result<TelemetrySample, PlantError> {
        let timing = self.config.timing;
        let measured = self.measure_thrust();
        let cap = self.config.voltage_cap(self.state.omega);
        let out = self
            .pid
            .step(thrust_command, measured, timing.control_period, cap);
        let voltage = out.value;

        let load = PropellerLoad {
            propeller: &self.config.propeller,
            env: self.config.environment,
        };
        let substeps = timing.substeps();
        let tick_index = (self.time / timing.control_period).round();
        let mut energy = 0.0;
        for _ in 0..substeps {
            let before = self.state.current;
            self.state = motor::step(
                self.state,
                voltage,
                self.beta,
                timing.dt,
                &self.config.motor,
                &load,
            )?;
            energy += 0.5 * voltage * (before + self.state.current);
        }
        // clock stays on the control grid
        self.time = (tick_index + 1.0) * timing.control_period;
        self.last_measured = measured;
        let sample = TelemetrySample {
            time: self.time,
            beta: self.beta,
            thrust_command,
            thrust_measured: measured,
            rpm: self.state.rpm(),
            voltage,
            current: self.state.current,
            power: energy / substeps as f64,
            at_ceiling: out.requested >= cap * (1.0 - CEILING_MARGIN),
        };
        if let Some(sink) = self.telemetry.as_mut() {
            sink(&sample);
        }
        Ok(sample)
    }

    /// Fixed-pitch closed-loop run following `command` for `duration`
    /// seconds; returns one sample per controller period.
    pub fn run_ramp(
        &mut self,
        beta: f64,
        command: RampCommand,
        duration: f64,
    ) -> Result<Vec<TelemetrySample>, PlantError> {
        self.set_pitch(beta)?;
        let period = self.config.timing.control_period;
        let ticks = (duration / period - TIME_EPS).ceil().max(0.0) as usize;
        let mut out = Vec::with_capacity(ticks);
        for k in 0..ticks {
            out.push(self.tick(command.value(k as f64 * period))?);
        }
        Ok(out)
    }
}

impl PropellerPort for SimulatedPlant {
    fn limits(&self) -> &PlantLimits {
        &self.config.limits
    }

    /// Ramps from the current measured thrust to `thrust` over the ramp
    /// duration, then regulates. After the ramp, returns the window average
    /// once the measured thrust has stayed inside the settle band for the
    /// settle window, or once the supply cap has bound for the settle window
    /// (saturated).
    fn set_propeller(&mut self, beta: f64, thrust: f64) -> Result<SettledMeasurement, PlantError> {
        let limits = self.config.limits;
        check_request(&limits, beta, thrust)?;
        self.beta = beta;
        let ramp = RampCommand {
            start: self.last_measured.max(0.0),
            target: thrust,
            duration: self.config.timing.ramp_duration,
        };
        let period = self.config.timing.control_period;
        let band = limits.settle_band(thrust);
        let window_ticks = (limits.settle_window / period - TIME_EPS).ceil() as usize;
        let ramp_ticks = (ramp.duration / period - TIME_EPS).ceil() as usize;
        let max_ticks = (limits.timeout / period + TIME_EPS).floor() as usize;

        let mut settled = Window::default();
        let mut pinned = Window::default();
        for k in 0..max_ticks {
            let sample = self.tick(ramp.value(k as f64 * period))?;
            if k < ramp_ticks {
                continue;
            }
            if (sample.thrust_measured - thrust).abs() <= band {
                settled.push(&sample);
            } else {
                settled.clear();
            }
            if sample.at_ceiling {
                pinned.push(&sample);
            } else {
                pinned.clear();
            }
            let elapsed = (k + 1) as f64 * period;
            if settled.ticks >= window_ticks {
                return Ok(settled.measurement(settled.all_at_ceiling, elapsed));
            }
            if pinned.ticks >= window_ticks {
                return Ok(pinned.measurement(true, elapsed));
            }
        }
        Err(PlantError::NoSettle {
            beta_deg: beta.to_degrees(),
            thrust,
            timeout: limits.timeout,
        })
    }

    fn elapsed(&self) -> f64 {
        self.time
    }
}

/// Algebraic equilibrium of the same motor/propeller/supply system, with no
/// transients. Each call advances the clock by a nominal ramp + window.
#[derive(Debug, Clone)]
pub struct SteadyStatePlant {
    propeller: Propeller,
    environment: Environment,
    motor: MotorParams,
    limits: PlantLimits,
    call_time: f64,
    time: f64,
}

impl SteadyStatePlant {
    pub fn new(config: &PlantConfig) -> Result<Self, ParamError> {
        config.validate()?;
        Ok(Self {
            propeller: config.propeller.clone(),
            environment: config.environment,
            motor: config.motor,
            limits: config.limits,
            call_time: config.timing.ramp_duration + config.limits.settle_window,
            time: 0.0,
        })
    }

    pub fn reference() -> Self {
        Self::new(&PlantConfig::reference()).expect("reference plant is valid")
    }

    /// Motor equilibrium holding shaft speed `rps` at pitch `beta`.
    pub fn equilibrium(&self, rps: f64, beta: f64) -> Equilibrium {
        let q = self
            .propeller
            .torque(&self.environment, OperatingPoint::new(rps, beta));
        Equilibrium::at_speed(2.0 * PI * rps, q, &self.motor)
    }

    fn within_supply(&self, e: &Equilibrium) -> bool {
        e.voltage <= self.motor.voltage_limit && e.power() <= self.limits.power_ceiling
    }
}

impl PropellerPort for SteadyStatePlant {
    fn limits(&self) -> &PlantLimits {
        &self.limits
    }

    fn set_propeller(&mut self, beta: f64, thrust: f64) -> Result<SettledMeasurement, PlantError> {
        check_request(&self.limits, beta, thrust)?;
        self.time += self.call_time;
        let env = &self.environment;
        let rps = match self.propeller.solve_speed_for_thrust(env, beta, thrust) {
            Ok(rps) => rps,
            // no speed reaches the thrust; the loop drives the supply to its cap
            Err(SolveError::Unachievable { .. }) => self.propeller.rps_ceiling(),
            Err(e) => return Err(e.into()),
        };
        let e = self.equilibrium(rps, beta);
        if rps < self.propeller.rps_ceiling() && self.within_supply(&e) {
            return Ok(SettledMeasurement {
                power: e.power(),
                thrust,
                rps,
                saturated: false,
                settle_time: self.call_time,
            });
        }
        // fastest speed the supply can hold
        let (mut lo, mut hi) = (0.0, rps);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.within_supply(&self.equilibrium(mid, beta)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let e = self.equilibrium(lo, beta);
        Ok(SettledMeasurement {
            power: e.power(),
            thrust: self.propeller.thrust(env, OperatingPoint::new(lo, beta)),
            rps: lo,
            saturated: true,
            settle_time: self.call_time,
        })
    }

    fn elapsed(&self) -> f64 {
        self.time
    }
}

/// Replays a fixed sequence of `(power, saturated)` readings, one per call,
/// and records the pitch of every request.
#[derive(Debug, Clone)]
pub struct ScriptedPlant {
    limits: PlantLimits,
    readings: Vec<(f64, bool)>,
    requests: Vec<f64>,
    call_time: f64,
}

impl ScriptedPlant {
    pub fn new(limits: PlantLimits, readings: Vec<(f64, bool)>) -> Self {
        Self {
            limits,
            readings,
            requests: Vec::new(),
            call_time: 1.0,
        }
    }

    /// Pitch angles requested so far.
    pub fn requests(&self) -> &[f64] {
        &self.requests
    }
}

impl PropellerPort for ScriptedPlant {
    fn limits(&self) -> &PlantLimits {
        &self.limits
    }

    /// Panics when the script runs out.
    fn set_propeller(&mut self, beta: f64, thrust: f64) -> Result<SettledMeasurement, PlantError> {
        check_request(&self.limits, beta, thrust)?;
        let (power, saturated) = *self
            .readings
            .get(self.requests.len())
            .expect("script exhausted");
        self.requests.push(beta);
        Ok(SettledMeasurement {
            power,
            thrust: if saturated { 0.9 * thrust } else { thrust },
            rps: 0.0,
            saturated,
            settle_time: self.call_time,
        })
    }

    fn elapsed(&self) -> f64 {
        self.requests.len() as f64 * self.call_time
    }
}

/// Power is a function of pitch alone; thrust is always achieved.
pub struct ObjectivePlant<F> {
    limits: PlantLimits,
    objective: F,
    calls: usize,
}

impl<F: FnMut(f64) -> (f64, bool)> ObjectivePlant<F> {
    /// `objective(beta)` returns `(power, saturated)`.
    pub fn new(limits: PlantLimits, objective: F) -> Self {
        Self {
            limits,
            objective,
            calls: 0,
        }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

impl<F: FnMut(f64) -> (f64, bool)> PropellerPort for ObjectivePlant<F> {
    fn limits(&self) -> &PlantLimits {
        &self.limits
    }

    fn set_propeller(&mut self, beta: f64, thrust: f64) -> Result<SettledMeasurement, PlantError> {
        check_request(&self.limits, beta, thrust)?;
        self.calls += 1;
        let (power, saturated) = (self.objective)(beta);
        Ok(SettledMeasurement {
            power,
            thrust: if saturated { 0.9 * thrust } else { thrust },
            rps: 0.0,
            saturated,
            settle_time: 1.0,
        })
    }

    fn elapsed(&self) -> f64 {
        self.calls as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_validation() {
        assert!(SimTiming::reference().validate().is_ok());
        let bad = SimTiming {
            dt: 3e-4,
            ..SimTiming::reference()
        };
        assert!(bad.validate().is_err());
        let ok = SimTiming {
            dt: 2.5e-4,
            ..SimTiming::reference()
        };
        assert_eq!(ok.substeps(), 4);
    }

    #[test]
    fn limits_validation() {
        let mut l = PlantLimits::reference();
        l.settle_tolerance = 1.0;
        assert!(l.validate().is_err());
        let mut l = PlantLimits::reference();
        l.beta_max = l.beta_min;
        assert!(l.validate().is_err());
    }

    #[test]
    fn voltage_cap_respects_power_ceiling() {
        let cfg = PlantConfig::reference();
        for omega in [0.0, 200.0, 800.0, 1500.0] {
            let v = cfg.voltage_cap(omega);
            assert!(v <= cfg.motor.voltage_limit);
            let i = (v - cfg.motor.emf_constant * omega) / cfg.motor.resistance;
            if v < cfg.motor.voltage_limit {
                assert!((v * i - 14.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn out_of_range_requests() {
        let mut plant = SimulatedPlant::reference();
        assert!(matches!(
            plant.set_propeller(30f64.to_radians(), 0.3),
            Err(PlantError::BetaOutOfRange { .. })
        ));
        assert!(matches!(
            plant.set_propeller(0.1, -0.3),
            Err(PlantError::InvalidThrust(_))
        ));
        let mut ss = SteadyStatePlant::reference();
        assert!(ss.set_propeller(-0.2, 0.3).is_err());
    }

    #[test]
    fn idle_plant() {
        let mut plant = SimulatedPlant::reference();
        let m = plant.set_propeller(9f64.to_radians(), 0.0).unwrap();
        assert_eq!(m.power, 0.0);
        assert_eq!(m.thrust, 0.0);
        assert!(!m.saturated);
        let mut ss = SteadyStatePlant::reference();
        let m = ss.set_propeller(0.1, 0.0).unwrap();
        assert_eq!(m.power, 0.0);
        assert!(!m.saturated);
    }

    #[test]
    fn steady_state_plant_saturates_at_low_pitch() {
        let mut ss = SteadyStatePlant::reference();
        let low = ss.set_propeller(0.59f64.to_radians(), 0.52).unwrap();
        assert!(low.saturated);
        assert!(low.thrust < 0.52);
        assert!((low.power - 14.0).abs() < 1e-6);
        let good = ss.set_propeller(9f64.to_radians(), 0.52).unwrap();
        assert!(!good.saturated);
        assert!(good.power < 2.0);
        assert_eq!(ss.elapsed(), 2.0 * 2.1);
    }

    #[test]
    fn scripted_plant_replays() {
        let mut p = ScriptedPlant::new(PlantLimits::reference(), vec![(3.0, true), (2.0, false)]);
        let a = p.set_propeller(0.1, 0.5).unwrap();
        let b = p.set_propeller(0.2, 0.5).unwrap();
        assert_eq!((a.power, a.saturated), (3.0, true));
        assert_eq!((b.power, b.saturated, b.thrust), (2.0, false, 0.5));
        assert_eq!(p.requests(), &[0.1, 0.2]);
    }
}
