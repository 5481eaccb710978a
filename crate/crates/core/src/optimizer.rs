//! Hill-climbing search for the pitch that minimises electrical power at a
//! fixed thrust, driving any [`PropellerPort`].
//!
//! Both climbers move in the direction that last lowered the power: up when
//! the plant saturates or the power fell, down otherwise. The variable-step
//! climber shrinks its step each time the direction reverses, down to a floor.

use thiserror::Error;

use crate::error::{finite, require, ParamError};
use crate::plant::{PlantError, PropellerPort, SettledMeasurement};

/// Relative slack when comparing steps against the floor.
const STEP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    FixedStep,
    VariableStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Starting pitch, rad.
    pub beta_init: f64,
    /// Initial step, rad. The fixed-step climber keeps it.
    pub pitch_step: f64,
    /// Shrink on each reversal, rad.
    pub step_decrement: f64,
    /// Step floor, rad.
    pub min_step: f64,
    /// Commanded thrust, N.
    pub thrust: f64,
    /// Plant calls allowed, including the first.
    pub max_calls: usize,
    /// Plant time allowed, s.
    pub max_time: f64,
    /// Stop after this many consecutive reversals at the step floor.
    pub convergence_reversals: Option<usize>,
}

impl OptimizerConfig {
    /// Constant 0.59° steps from 0.59° at 0.52 N for three minutes.
    pub fn reference_fixed() -> Self {
        let step = 0.59f64.to_radians();
        Self {
            beta_init: step,
            pitch_step: step,
            step_decrement: 0.0,
            min_step: step,
            thrust: 0.52,
            max_calls: usize::MAX,
            max_time: 180.0,
            convergence_reversals: None,
        }
    }

    /// Steps of 1.77° shrinking by 0.59° per reversal to 0.59°.
    pub fn reference_variable() -> Self {
        Self {
            pitch_step: 1.77f64.to_radians(),
            step_decrement: 0.59f64.to_radians(),
            ..Self::reference_fixed()
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        finite(self.beta_init, "beta_init_deg")?;
        finite(self.thrust, "thrust_n")?;
        require(self.thrust >= 0.0, "thrust_n", "must be non-negative")?;
        require(
            self.pitch_step > 0.0 && self.pitch_step.is_finite(),
            "pitch_step_deg",
            "must be positive",
        )?;
        require(
            self.min_step > 0.0 && self.min_step <= self.pitch_step * (1.0 + STEP_EPS),
            "min_step_deg",
            "must be positive and no larger than the initial step",
        )?;
        require(
            self.step_decrement >= 0.0 && self.step_decrement.is_finite(),
            "step_decrement_deg",
            "must be non-negative",
        )?;
        require(
            !self.max_time.is_nan() && self.max_time >= 0.0,
            "max_time_s",
            "must be non-negative",
        )?;
        require(
            self.convergence_reversals != Some(0),
            "convergence_reversals",
            "must be at least 1",
        )
    }

    fn at_floor(&self, step: f64) -> bool {
        step <= self.min_step * (1.0 + STEP_EPS)
    }
}

/// One plant call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// 0 for the initial call.
    pub iteration: usize,
    /// Plant time since the search began, at the end of the call, s.
    pub time: f64,
    /// Pitch requested, rad.
    pub beta: f64,
    pub power: f64,
    pub thrust: f64,
    /// Direction of the move that led here; +1 for the initial call.
    pub direction: i8,
    /// Step used for that move, rad.
    pub step: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    CallBudget,
    TimeBudget,
    Converged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub algorithm: Algorithm,
    pub records: Vec<TraceRecord>,
    pub stop: StopReason,
}

impl OptimizationTrace {
    pub fn plant_calls(&self) -> usize {
        self.records.len()
    }

    pub fn terminal(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Lowest-power record that held the thrust.
    pub fn best(&self) -> Option<&TraceRecord> {
        self.records
            .iter()
            .filter(|r| !r.saturated)
            .min_by(|a, b| a.power.total_cmp(&b.power))
    }

    /// Plant calls made up to and including the first one within `tol` of
    /// `beta`.
    pub fn first_within(&self, beta: f64, tol: f64) -> Option<usize> {
        self.records
            .iter()
            .position(|r| (r.beta - beta).abs() <= tol)
            .map(|i| i + 1)
    }
}

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Config(#[from] ParamError),
    #[error("plant failed after {} calls: {source}", trace.records.len())]
    Aborted {
        trace: OptimizationTrace,
        source: PlantError,
    },
    #[error("commanded thrust is not achievable at any pitch on the grid")]
    NowhereAchievable,
}

/// Constant-step climber.
pub fn fixed_step_optimize<P: PropellerPort + ?Sized>(
    plant: &mut P,
    config: &OptimizerConfig,
) -> Result<OptimizationTrace, OptimizeError> {
    climb(plant, config, Algorithm::FixedStep)
}

/// Climber whose step shrinks by `step_decrement` on each direction reversal
/// until it reaches `min_step`. Hitting an actuator end stop counts as a
/// reversal.
pub fn variable_step_optimize<P: PropellerPort + ?Sized>(
    plant: &mut P,
    config: &OptimizerConfig,
) -> Result<OptimizationTrace, OptimizeError> {
    climb(plant, config, Algorithm::VariableStep)
}

pub fn optimize<P: PropellerPort + ?Sized>(
    plant: &mut P,
    config: &OptimizerConfig,
    algorithm: Algorithm,
) -> Result<OptimizationTrace, OptimizeError> {
    climb(plant, config, algorithm)
}

fn climb<P: PropellerPort + ?Sized>(
    plant: &mut P,
    config: &OptimizerConfig,
    algorithm: Algorithm,
) -> Result<OptimizationTrace, OptimizeError> {
    config.validate()?;
    let limits = *plant.limits();
    if !limits.contains(config.beta_init) {
        return Err(ParamError::new("beta_init_deg", "outside the actuator range").into());
    }
    let mut trace = OptimizationTrace {
        algorithm,
        records: Vec::new(),
        stop: StopReason::CallBudget,
    };
    if config.max_calls == 0 {
        return Ok(trace);
    }

    let t0 = plant.elapsed();
    let record = |iteration, time, beta, m: &SettledMeasurement, direction, step| TraceRecord {
        iteration,
        time,
        beta,
        power: m.power,
        thrust: m.thrust,
        direction,
        step,
        saturated: m.saturated,
    };

    let mut beta = config.beta_init;
    let mut step = config.pitch_step;
    let mut last = match plant.set_propeller(beta, config.thrust) {
        Ok(m) => m,
        Err(source) => return Err(OptimizeError::Aborted { trace, source }),
    };
    trace
        .records
        .push(record(0, plant.elapsed() - t0, beta, &last, 1, step));

    let mut diff_power = 1.0;
    let mut prev_direction: i8 = 1;
    let mut streak = 0;
    loop {
        if trace.records.len() >= config.max_calls {
            trace.stop = StopReason::CallBudget;
            break;
        }
        if plant.elapsed() - t0 >= config.max_time {
            trace.stop = StopReason::TimeBudget;
            break;
        }
        let direction: i8 = if last.saturated || diff_power > 0.0 {
            1
        } else {
            -1
        };
        let reversal = direction != prev_direction;
        if algorithm == Algorithm::VariableStep && reversal && !config.at_floor(step) {
            step = (step - config.step_decrement).max(config.min_step);
        }
        let target = beta + f64::from(direction) * step;
        let next_beta = limits.clamp(target);
        let clamped = next_beta != target;

        let m = match plant.set_propeller(next_beta, config.thrust) {
            Ok(m) => m,
            Err(source) => return Err(OptimizeError::Aborted { trace, source }),
        };
        diff_power = last.power - m.power;
        beta = next_beta;
        last = m;
        let iteration = trace.records.len();
        trace.records.push(record(
            iteration,
            plant.elapsed() - t0,
            beta,
            &last,
            direction,
            step,
        ));

        streak = if reversal && config.at_floor(step) {
            streak + 1
        } else {
            0
        };
        if config.convergence_reversals.is_some_and(|k| streak >= k) {
            trace.stop = StopReason::Converged;
            break;
        }
        prev_direction = if algorithm == Algorithm::VariableStep && clamped {
            -direction
        } else {
            direction
        };
    }
    Ok(trace)
}

/// Best point of an exhaustive pitch sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub beta: f64,
    pub power: f64,
    /// Points evaluated.
    pub evaluated: usize,
}

/// Lowest-power pitch on `grid` among the points that hold the thrust; ties
/// go to the lowest pitch.
pub fn grid_search_optimum<P: PropellerPort + ?Sized>(
    plant: &mut P,
    grid: &[f64],
    thrust: f64,
) -> Result<GridOptimum, OptimizeError> {
    let mut best: Option<GridOptimum> = None;
    for (k, &beta) in grid.iter().enumerate() {
        let m = plant
            .set_propeller(beta, thrust)
            .map_err(|source| OptimizeError::Aborted {
                trace: OptimizationTrace {
                    algorithm: Algorithm::FixedStep,
                    records: Vec::new(),
                    stop: StopReason::CallBudget,
                },
                source,
            })?;
        if m.saturated {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => m.power < b.power || (m.power == b.power && beta < b.beta),
        };
        if better {
            best = Some(GridOptimum {
                beta,
                power: m.power,
                evaluated: k + 1,
            });
        }
    }
    let mut out = best.ok_or(OptimizeError::NowhereAchievable)?;
    out.evaluated = grid.len();
    Ok(out)
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn pitch_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}
