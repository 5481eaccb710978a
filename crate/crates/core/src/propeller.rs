//! Blade-element model of a variable-pitch propeller.
//!
//! Every blade section sees the resultant of the axial airspeed `V` and the
//! rotational speed `2πrn`. Lift and drag follow a linear lift curve with a
//! quadratic drag polar, are projected onto the propeller axis (thrust) and
//! the rotation plane (torque), and integrated along the span. Section
//! velocities are kept dimensional so that `n = 0` needs no special casing.

use std::f64::consts::PI;

use thiserror::Error;

use crate::error::{finite, require, ParamError};
use crate::roots::{invert_increasing, RootError};

/// Default number of Simpson intervals across the span.
pub const DEFAULT_STATIONS: usize = 256;
/// Default upper bound on rotational speed for the speed solvers (rev/s).
pub const DEFAULT_RPS_CEILING: f64 = 500.0;
const INITIAL_RPS_BRACKET: f64 = 50.0;

/// One row of the chord table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordStation {
    /// m
    pub radius: f64,
    /// m
    pub chord: f64,
}

impl ChordStation {
    pub fn new(radius: f64, chord: f64) -> Self {
        Self { radius, chord }
    }
}

/// Propeller diameter, blade count and a piecewise-linear chord distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BladeGeometry {
    diameter: f64,
    blade_count: u32,
    stations: Vec<ChordStation>,
}

impl BladeGeometry {
    pub fn new(
        diameter: f64,
        blade_count: u32,
        stations: Vec<ChordStation>,
    ) -> Result<Self, ParamError> {
        finite(diameter, "diameter_m")?;
        require(diameter > 0.0, "diameter_m", "must be positive")?;
        require(blade_count >= 1, "blades", "need at least one blade")?;
        require(
            stations.len() >= 2,
            "chord_table",
            "need at least two stations",
        )?;
        let tip = 0.5 * diameter;
        for s in &stations {
            require(
                s.radius.is_finite() && s.chord.is_finite(),
                "chord_table",
                "entries must be finite",
            )?;
            require(
                (0.0..=tip).contains(&s.radius),
                "chord_table",
                "radii must lie in [0, diameter/2]",
            )?;
            require(s.chord >= 0.0, "chord_table", "chords must be non-negative")?;
        }
        require(
            stations.windows(2).all(|w| w[1].radius > w[0].radius),
            "chord_table",
            "radii must be strictly increasing",
        )?;
        Ok(Self {
            diameter,
            blade_count,
            stations,
        })
    }

    /// 0.25 m two-blade propeller with a linear taper from 25 mm at r = 20 mm
    /// to 12 mm at the tip. Invented reference values.
    pub fn reference() -> Self {
        Self::new(
            0.25,
            2,
            vec![
                ChordStation::new(0.02, 0.025),
                ChordStation::new(0.125, 0.012),
            ],
        )
        .expect("reference geometry is valid")
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn blade_count(&self) -> u32 {
        self.blade_count
    }

    pub fn stations(&self) -> &[ChordStation] {
        &self.stations
    }

    /// Radial extent `[r_first, r_last]` of the chord table.
    pub fn span(&self) -> (f64, f64) {
        (
            self.stations[0].radius,
            self.stations[self.stations.len() - 1].radius,
        )
    }

    /// Chord at radius `r`, linearly interpolated; zero outside the table.
    pub fn chord_at(&self, r: f64) -> f64 {
        let (first, last) = self.span();
        if r < first || r > last {
            return 0.0;
        }
        let i = self
            .stations
            .partition_point(|s| s.radius <= r)
            .clamp(1, self.stations.len() - 1);
        let (a, b) = (self.stations[i - 1], self.stations[i]);
        if r == b.radius {
            return b.chord;
        }
        a.chord + (b.chord - a.chord) * (r - a.radius) / (b.radius - a.radius)
    }
}

/// Section lift and drag model shared by all blade sections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroModel {
    /// Lift-curve slope, 1/rad.
    pub lift_slope: f64,
    /// Zero-lift angle of attack, rad.
    pub zero_lift_alpha: f64,
    /// Parasite drag coefficient.
    pub parasite_drag: f64,
    /// Induced drag factor multiplying `C_L²`.
    pub induced_factor: f64,
}

impl AeroModel {
    pub fn new(
        lift_slope: f64,
        zero_lift_alpha: f64,
        parasite_drag: f64,
        induced_factor: f64,
    ) -> Result<Self, ParamError> {
        finite(lift_slope, "cl_alpha")?;
        finite(zero_lift_alpha, "alpha0_rad")?;
        finite(parasite_drag, "cd0")?;
        finite(induced_factor, "k_induced")?;
        require(lift_slope > 0.0, "cl_alpha", "must be positive")?;
        require(parasite_drag >= 0.0, "cd0", "must be non-negative")?;
        require(induced_factor >= 0.0, "k_induced", "must be non-negative")?;
        Ok(Self {
            lift_slope,
            zero_lift_alpha,
            parasite_drag,
            induced_factor,
        })
    }

    /// Invented reference section: thin-airfoil-like slope, symmetric section.
    pub fn reference() -> Self {
        Self::new(5.7, 0.0, 0.015, 0.05).expect("reference aero model is valid")
    }
}

/// Free-stream conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    /// kg/m³
    pub air_density: f64,
    /// Axial airspeed, m/s.
    pub airspeed: f64,
}

impl Environment {
    pub fn new(air_density: f64, airspeed: f64) -> Result<Self, ParamError> {
        finite(air_density, "rho")?;
        finite(airspeed, "airspeed")?;
        require(air_density > 0.0, "rho", "must be positive")?;
        require(airspeed >= 0.0, "airspeed", "must be non-negative")?;
        Ok(Self {
            air_density,
            airspeed,
        })
    }

    /// Sea-level density at rest.
    pub fn sea_level_static() -> Self {
        Self {
            air_density: 1.225,
            airspeed: 0.0,
        }
    }

    pub fn with_airspeed(self, airspeed: f64) -> Result<Self, ParamError> {
        Self::new(self.air_density, airspeed)
    }
}

impl Default for Environment {
    fn default() -> Self {
        Self::sea_level_static()
    }
}

/// Rotational speed and blade pitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// rev/s
    pub rps: f64,
    /// rad
    pub pitch: f64,
}

impl OperatingPoint {
    pub fn new(rps: f64, pitch: f64) -> Self {
        Self { rps, pitch }
    }

    /// Advance ratio `V / (n d)`; infinite at `n = 0`.
    pub fn advance_ratio(&self, env: &Environment, diameter: f64) -> f64 {
        env.airspeed / (self.rps * diameter)
    }
}

/// `V² + (2πrn)²`.
pub fn section_speed_squared(r: f64, n: f64, env: &Environment) -> f64 {
    let u = 2.0 * PI * r * n;
    env.airspeed * env.airspeed + u * u
}

/// Angle between the section's resultant velocity and the rotation plane.
/// Zero when both velocity components vanish.
pub fn inflow_angle(r: f64, n: f64, env: &Environment) -> f64 {
    env.airspeed.atan2(2.0 * PI * r * n)
}

/// Lift and drag coefficients `(C_L, C_D)` at angle of attack `alpha`.
pub fn section_coefficients(alpha: f64, aero: &AeroModel) -> (f64, f64) {
    let cl = aero.lift_slope * (alpha - aero.zero_lift_alpha);
    (cl, aero.parasite_drag + aero.induced_factor * cl * cl)
}

/// Thrust and torque from one spanwise integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loads {
    /// N
    pub thrust: f64,
    /// N·m
    pub torque: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SolveError {
    #[error("target {target} not reached below {ceiling} rev/s (max {reached})")]
    Unachievable {
        target: f64,
        reached: f64,
        ceiling: f64,
    },
    #[error("response is not monotone in speed near the target (bracket [0, {hi}] rev/s)")]
    NonMonotonic { hi: f64 },
    #[error("target must be finite and non-negative, got {0}")]
    InvalidTarget(f64),
}

impl From<RootError> for SolveError {
    fn from(e: RootError) -> Self {
        match e {
            RootError::Unachievable {
                target,
                reached,
                ceiling,
            } => SolveError::Unachievable {
                target,
                reached,
                ceiling,
            },
            RootError::NonMonotonic { hi } => SolveError::NonMonotonic { hi },
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    radius: f64,
    /// quadrature weight × chord
    weight: f64,
}

/// A blade geometry and section model with a precomputed quadrature rule.
///
/// All methods are pure; a `Propeller` can be shared across threads.
#[derive(Debug, Clone)]
pub struct Propeller {
    geometry: BladeGeometry,
    aero: AeroModel,
    stations: usize,
    rps_ceiling: f64,
    nodes: Vec<Node>,
}

impl Propeller {
    pub fn new(geometry: BladeGeometry, aero: AeroModel) -> Self {
        Self::with_stations(geometry, aero, DEFAULT_STATIONS).expect("default station count")
    }

    /// Composite Simpson over each chord-table segment; `stations` intervals
    /// are split across segments in proportion to their length (each segment
    /// gets an even count of at least two).
    pub fn with_stations(
        geometry: BladeGeometry,
        aero: AeroModel,
        stations: usize,
    ) -> Result<Self, ParamError> {
        require(stations >= 2, "quadrature_stations", "need at least two")?;
        let (first, last) = geometry.span();
        let span = last - first;
        let mut nodes: Vec<Node> = Vec::with_capacity(stations + 2);
        for seg in geometry.stations().windows(2) {
            let (a, b) = (seg[0].radius, seg[1].radius);
            let share = stations as f64 * (b - a) / span;
            let k = (2 * (share / 2.0).round() as usize).max(2);
            let h = (b - a) / k as f64;
            for j in 0..=k {
                let r = if j == k { b } else { a + h * j as f64 };
                let simpson = match j {
                    0 => 1.0,
                    j if j == k => 1.0,
                    j if j % 2 == 1 => 4.0,
                    _ => 2.0,
                };
                let c = seg[0].chord + (seg[1].chord - seg[0].chord) * (r - a) / (b - a);
                let weight = simpson * h / 3.0 * c;
                // adjacent segments share their boundary node
                match nodes.last_mut() {
                    Some(prev) if j == 0 && prev.radius == r => prev.weight += weight,
                    _ => nodes.push(Node { radius: r, weight }),
                }
            }
        }
        Ok(Self {
            geometry,
            aero,
            stations,
            rps_ceiling: DEFAULT_RPS_CEILING,
            nodes,
        })
    }

    pub fn reference() -> Self {
        Self::new(BladeGeometry::reference(), AeroModel::reference())
    }

    /// Raises or lowers the speed-solver ceiling (rev/s).
    pub fn with_rps_ceiling(mut self, ceiling: f64) -> Result<Self, ParamError> {
        require(
            ceiling.is_finite() && ceiling > 0.0,
            "rps_ceiling",
            "must be positive",
        )?;
        self.rps_ceiling = ceiling;
        Ok(self)
    }

    pub fn geometry(&self) -> &BladeGeometry {
        &self.geometry
    }

    pub fn aero(&self) -> &AeroModel {
        &self.aero
    }

    pub fn stations(&self) -> usize {
        self.stations
    }

    pub fn rps_ceiling(&self) -> f64 {
        self.rps_ceiling
    }

    /// Thrust and torque at `op`.
    pub fn loads(&self, env: &Environment, op: OperatingPoint) -> Loads {
        let v = env.airspeed;
        let mut thrust = 0.0;
        let mut torque = 0.0;
        for node in &self.nodes {
            let u = 2.0 * PI * node.radius * op.rps;
            let w2 = v * v + u * u;
            if w2 == 0.0 {
                continue;
            }
            let w = w2.sqrt();
            let (sin_g, cos_g) = (v / w, u / w);
            let gamma = v.atan2(u);
            let (cl, cd) = section_coefficients(op.pitch - gamma, &self.aero);
            let q = w2 * node.weight;
            thrust += q * (cl * cos_g - cd * sin_g);
            torque += q * (cl * sin_g + cd * cos_g) * node.radius;
        }
        let scale = 0.5 * self.geometry.blade_count as f64 * env.air_density;
        Loads {
            thrust: scale * thrust,
            torque: scale * torque,
        }
    }

    pub fn thrust(&self, env: &Environment, op: OperatingPoint) -> f64 {
        self.loads(env, op).thrust
    }

    pub fn torque(&self, env: &Environment, op: OperatingPoint) -> f64 {
        self.loads(env, op).torque
    }

    /// Shaft power `2πn·Q`.
    pub fn power(&self, env: &Environment, op: OperatingPoint) -> f64 {
        2.0 * PI * op.rps * self.torque(env, op)
    }

    /// Rotational speed at which the propeller produces `thrust` at pitch `beta`.
    pub fn solve_speed_for_thrust(
        &self,
        env: &Environment,
        beta: f64,
        thrust: f64,
    ) -> Result<f64, SolveError> {
        check_target(thrust)?;
        let n = invert_increasing(
            |n| self.thrust(env, OperatingPoint::new(n, beta)),
            thrust,
            INITIAL_RPS_BRACKET,
            self.rps_ceiling,
            residual_tolerance(thrust),
        )?;
        Ok(n)
    }

    /// Rotational speed at which the propeller absorbs `power` at pitch `beta`.
    pub fn solve_speed_for_power(
        &self,
        env: &Environment,
        beta: f64,
        power: f64,
    ) -> Result<f64, SolveError> {
        check_target(power)?;
        let n = invert_increasing(
            |n| self.power(env, OperatingPoint::new(n, beta)),
            power,
            INITIAL_RPS_BRACKET,
            self.rps_ceiling,
            residual_tolerance(power),
        )?;
        Ok(n)
    }

    /// Shaft power needed to hold `thrust` at pitch `beta`.
    pub fn required_power(
        &self,
        env: &Environment,
        beta: f64,
        thrust: f64,
    ) -> Result<f64, SolveError> {
        let n = self.solve_speed_for_thrust(env, beta, thrust)?;
        Ok(self.power(env, OperatingPoint::new(n, beta)))
    }

    /// Thrust produced when the propeller absorbs `power` at pitch `beta`.
    pub fn thrust_from_power(
        &self,
        env: &Environment,
        beta: f64,
        power: f64,
    ) -> Result<f64, SolveError> {
        let n = self.solve_speed_for_power(env, beta, power)?;
        Ok(self.thrust(env, OperatingPoint::new(n, beta)))
    }
}

/// Solver acceptance on the residual: `max(1e-9, 1e-9·target)`.
pub fn residual_tolerance(target: f64) -> f64 {
    1e-9_f64.max(1e-9 * target.abs())
}

fn check_target(target: f64) -> Result<(), SolveError> {
    if target.is_finite() && target >= 0.0 {
        Ok(())
    } else {
        Err(SolveError::InvalidTarget(target))
    }
}
