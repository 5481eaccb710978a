//! Flat `key = value` parameter files.
//!
//! `#` starts a comment. Keys not listed in [`KEYS`] are rejected, as are
//! duplicates. Absent keys keep their reference values. Angles are in
//! degrees in the file and radians in memory.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::control::{AffineMap, Calibration, PidGains};
use crate::error::ParamError;
use crate::motor::MotorParams;
use crate::optimizer::OptimizerConfig;
use crate::plant::{PlantConfig, PlantLimits, SimTiming};
use crate::propeller::{AeroModel, BladeGeometry, ChordStation, Environment, Propeller};

/// Every recognised key.
pub const KEYS: &[&str] = &[
    "diameter_m",
    "blades",
    "chord_table",
    "cl_alpha",
    "alpha0_rad",
    "cd0",
    "k_induced",
    "quadrature_stations",
    "rps_ceiling",
    "rho",
    "airspeed",
    "inertia_kgm2",
    "emf_constant",
    "viscous_friction",
    "resistance_ohm",
    "inductance_h",
    "voltage_limit_v",
    "kp",
    "ki",
    "kd",
    "integral_limit_v",
    "ramp_duration_s",
    "control_period_s",
    "dt_s",
    "noise_n",
    "seed",
    "cal_voltage_scale",
    "cal_voltage_offset",
    "cal_current_scale",
    "cal_current_offset",
    "cal_thrust_scale",
    "cal_thrust_offset",
    "cal_pitch_scale",
    "cal_pitch_offset",
    "power_ceiling_w",
    "beta_min_deg",
    "beta_max_deg",
    "settle_tolerance",
    "settle_window_s",
    "timeout_s",
    "beta_init_deg",
    "thrust_n",
    "pitch_step_deg",
    "variable_pitch_step_deg",
    "step_decrement_deg",
    "min_step_deg",
    "max_iterations",
    "max_time_s",
    "convergence_reversals",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error(transparent)]
    Invalid(#[from] ParamError),
}

/// Plant and optimizer settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub plant: PlantConfig,
    pub fixed: OptimizerConfig,
    pub variable: OptimizerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::reference()
    }
}

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_owned(),
                });
            }
            if map
                .insert(key.to_owned(), (line, value.to_owned()))
                .is_some()
            {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_owned(),
                });
            }
        }
        Ok(Self(map))
    }

    fn bad(&self, key: &str) -> ConfigError {
        let (line, value) = self.0[key].clone();
        ConfigError::BadValue {
            line,
            key: key.to_owned(),
            value,
        }
    }

    fn get<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<(), ConfigError> {
        if let Some((_, v)) = self.0.get(key) {
            *slot = v.parse().map_err(|_| self.bad(key))?;
        }
        Ok(())
    }

    fn get_deg(&self, key: &str, slot: &mut f64) -> Result<(), ConfigError> {
        let mut deg = slot.to_degrees();
        self.get(key, &mut deg)?;
        if self.0.contains_key(key) {
            *slot = deg.to_radians();
        }
        Ok(())
    }

    /// `none` or a count.
    fn get_optional(&self, key: &str, slot: &mut Option<usize>) -> Result<(), ConfigError> {
        if let Some((_, v)) = self.0.get(key) {
            *slot = if v == "none" {
                None
            } else {
                Some(v.parse().map_err(|_| self.bad(key))?)
            };
        }
        Ok(())
    }

    fn get_chords(&self, key: &str) -> Result<Option<Vec<ChordStation>>, ConfigError> {
        let Some((_, v)) = self.0.get(key) else {
            return Ok(None);
        };
        v.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|pair| {
                let (r, c) = pair.split_once(':')?;
                Some(ChordStation::new(
                    r.trim().parse().ok()?,
                    c.trim().parse().ok()?,
                ))
            })
            .collect::<Option<Vec<_>>>()
            .map(Some)
            .ok_or_else(|| self.bad(key))
    }

    fn get_map(&self, prefix: &str, map: &mut AffineMap) -> Result<(), ConfigError> {
        let (mut scale, mut offset) = (map.scale, map.offset);
        let scale_key = format!("cal_{prefix}_scale");
        let offset_key = format!("cal_{prefix}_offset");
        self.get(&scale_key, &mut scale)?;
        self.get(&offset_key, &mut offset)?;
        *map = AffineMap::new(scale, offset)?;
        Ok(())
    }
}

impl RunConfig {
    pub fn reference() -> Self {
        Self {
            plant: PlantConfig::reference(),
            fixed: OptimizerConfig::reference_fixed(),
            variable: OptimizerConfig::reference_variable(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Reference values overridden by the keys present in `text`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let e = Entries::parse(text)?;
        let base = Self::reference();
        let plant = &base.plant;

        let prop = &plant.propeller;
        let mut diameter = prop.geometry().diameter();
        let mut blades = prop.geometry().blade_count();
        let chords = e
            .get_chords("chord_table")?
            .unwrap_or_else(|| prop.geometry().stations().to_vec());
        e.get("diameter_m", &mut diameter)?;
        e.get("blades", &mut blades)?;
        let geometry = BladeGeometry::new(diameter, blades, chords)?;

        let a = prop.aero();
        let (mut cla, mut a0, mut cd0, mut k) = (
            a.lift_slope,
            a.zero_lift_alpha,
            a.parasite_drag,
            a.induced_factor,
        );
        e.get("cl_alpha", &mut cla)?;
        e.get("alpha0_rad", &mut a0)?;
        e.get("cd0", &mut cd0)?;
        e.get("k_induced", &mut k)?;
        let aero = AeroModel::new(cla, a0, cd0, k)?;

        let mut stations = prop.stations();
        let mut ceiling = prop.rps_ceiling();
        e.get("quadrature_stations", &mut stations)?;
        e.get("rps_ceiling", &mut ceiling)?;
        let propeller =
            Propeller::with_stations(geometry, aero, stations)?.with_rps_ceiling(ceiling)?;

        let (mut rho, mut airspeed) = (plant.environment.air_density, plant.environment.airspeed);
        e.get("rho", &mut rho)?;
        e.get("airspeed", &mut airspeed)?;
        let environment = Environment::new(rho, airspeed)?;

        let mut m: MotorParams = plant.motor;
        e.get("inertia_kgm2", &mut m.inertia)?;
        e.get("emf_constant", &mut m.emf_constant)?;
        e.get("viscous_friction", &mut m.viscous_friction)?;
        e.get("resistance_ohm", &mut m.resistance)?;
        e.get("inductance_h", &mut m.inductance)?;
        e.get("voltage_limit_v", &mut m.voltage_limit)?;

        let mut g: PidGains = plant.gains;
        e.get("kp", &mut g.kp)?;
        e.get("ki", &mut g.ki)?;
        e.get("kd", &mut g.kd)?;
        e.get("integral_limit_v", &mut g.integral_limit)?;

        let mut t: SimTiming = plant.timing;
        e.get("ramp_duration_s", &mut t.ramp_duration)?;
        e.get("control_period_s", &mut t.control_period)?;
        e.get("dt_s", &mut t.dt)?;

        let mut noise = plant.noise;
        let mut seed = plant.seed;
        e.get("noise_n", &mut noise)?;
        e.get("seed", &mut seed)?;

        let mut cal: Calibration = plant.calibration;
        e.get_map("voltage", &mut cal.supply_voltage)?;
        e.get_map("current", &mut cal.current)?;
        e.get_map("thrust", &mut cal.thrust)?;
        e.get_map("pitch", &mut cal.pitch)?;

        let mut l: PlantLimits = plant.limits;
        e.get("power_ceiling_w", &mut l.power_ceiling)?;
        e.get_deg("beta_min_deg", &mut l.beta_min)?;
        e.get_deg("beta_max_deg", &mut l.beta_max)?;
        e.get("settle_tolerance", &mut l.settle_tolerance)?;
        e.get("settle_window_s", &mut l.settle_window)?;
        e.get("timeout_s", &mut l.timeout)?;

        let plant = PlantConfig {
            propeller,
            environment,
            motor: m,
            gains: g,
            calibration: cal,
            limits: l,
            timing: t,
            noise,
            seed,
        };
        plant.validate()?;

        let mut fixed = base.fixed;
        let mut variable = base.variable;
        for o in [&mut fixed, &mut variable] {
            e.get_deg("beta_init_deg", &mut o.beta_init)?;
            e.get("thrust_n", &mut o.thrust)?;
            e.get_deg("min_step_deg", &mut o.min_step)?;
            e.get("max_time_s", &mut o.max_time)?;
            let mut calls = (o.max_calls != usize::MAX).then_some(o.max_calls);
            e.get_optional("max_iterations", &mut calls)?;
            o.max_calls = calls.unwrap_or(usize::MAX);
            e.get_optional("convergence_reversals", &mut o.convergence_reversals)?;
        }
        e.get_deg("pitch_step_deg", &mut fixed.pitch_step)?;
        e.get_deg("variable_pitch_step_deg", &mut variable.pitch_step)?;
        e.get_deg("step_decrement_deg", &mut variable.step_decrement)?;
        fixed.validate()?;
        variable.validate()?;

        Ok(Self {
            plant,
            fixed,
            variable,
        })
    }
}

/// Writes every key, so the output parses back to the same configuration.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.plant;
        let g = p.propeller.geometry();
        let a = p.propeller.aero();
        let mut chords = String::new();
        for (i, s) in g.stations().iter().enumerate() {
            if i > 0 {
                chords.push_str("; ");
            }
            write!(chords, "{}:{}", s.radius, s.chord)?;
        }
        let opt = |v: Option<usize>| v.map_or("none".to_owned(), |k| k.to_string());
        let calls = (self.fixed.max_calls != usize::MAX).then_some(self.fixed.max_calls);
        let c = &p.calibration;
        let m = &p.motor;
        let lines: Vec<(&str, String)> = vec![
            ("diameter_m", g.diameter().to_string()),
            ("blades", g.blade_count().to_string()),
            ("chord_table", chords),
            ("cl_alpha", a.lift_slope.to_string()),
            ("alpha0_rad", a.zero_lift_alpha.to_string()),
            ("cd0", a.parasite_drag.to_string()),
            ("k_induced", a.induced_factor.to_string()),
            ("quadrature_stations", p.propeller.stations().to_string()),
            ("rps_ceiling", p.propeller.rps_ceiling().to_string()),
            ("rho", p.environment.air_density.to_string()),
            ("airspeed", p.environment.airspeed.to_string()),
            ("inertia_kgm2", m.inertia.to_string()),
            ("emf_constant", m.emf_constant.to_string()),
            ("viscous_friction", m.viscous_friction.to_string()),
            ("resistance_ohm", m.resistance.to_string()),
            ("inductance_h", m.inductance.to_string()),
            ("voltage_limit_v", m.voltage_limit.to_string()),
            ("kp", p.gains.kp.to_string()),
            ("ki", p.gains.ki.to_string()),
            ("kd", p.gains.kd.to_string()),
            ("integral_limit_v", p.gains.integral_limit.to_string()),
            ("ramp_duration_s", p.timing.ramp_duration.to_string()),
            ("control_period_s", p.timing.control_period.to_string()),
            ("dt_s", p.timing.dt.to_string()),
            ("noise_n", p.noise.to_string()),
            ("seed", p.seed.to_string()),
            ("cal_voltage_scale", c.supply_voltage.scale.to_string()),
            ("cal_voltage_offset", c.supply_voltage.offset.to_string()),
            ("cal_current_scale", c.current.scale.to_string()),
            ("cal_current_offset", c.current.offset.to_string()),
            ("cal_thrust_scale", c.thrust.scale.to_string()),
            ("cal_thrust_offset", c.thrust.offset.to_string()),
            ("cal_pitch_scale", c.pitch.scale.to_string()),
            ("cal_pitch_offset", c.pitch.offset.to_string()),
            ("power_ceiling_w", p.limits.power_ceiling.to_string()),
            ("beta_min_deg", p.limits.beta_min.to_degrees().to_string()),
            ("beta_max_deg", p.limits.beta_max.to_degrees().to_string()),
            ("settle_tolerance", p.limits.settle_tolerance.to_string()),
            ("settle_window_s", p.limits.settle_window.to_string()),
            ("timeout_s", p.limits.timeout.to_string()),
            (
                "beta_init_deg",
                self.fixed.beta_init.to_degrees().to_string(),
            ),
            ("thrust_n", self.fixed.thrust.to_string()),
            (
                "pitch_step_deg",
                self.fixed.pitch_step.to_degrees().to_string(),
            ),
            (
                "variable_pitch_step_deg",
                self.variable.pitch_step.to_degrees().to_string(),
            ),
            (
                "step_decrement_deg",
                self.variable.step_decrement.to_degrees().to_string(),
            ),
            ("min_step_deg", self.fixed.min_step.to_degrees().to_string()),
            ("max_iterations", opt(calls)),
            ("max_time_s", self.fixed.max_time.to_string()),
            (
                "convergence_reversals",
                opt(self.fixed.convergence_reversals),
            ),
        ];
        for (k, v) in lines {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
