//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use pitchopt_core::control::{Calibration, RampCommand};
use pitchopt_core::motor::{self, MotorParams, MotorState, PropellerLoad};
use pitchopt_core::optimizer::{
    fixed_step_optimize, grid_search_optimum, pitch_grid, variable_step_optimize,
    OptimizationTrace, OptimizerConfig,
};
use pitchopt_core::plant::{
    PlantConfig, PlantLimits, PropellerPort, ScriptedPlant, SimTiming, SimulatedPlant,
};
use pitchopt_core::propeller::{
    residual_tolerance, AeroModel, BladeGeometry, Environment, OperatingPoint, Propeller,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn deg(x: f64) -> f64 {
    x.to_radians()
}

fn env(v: f64) -> Environment {
    Environment::new(1.225, v).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Exactly one descending-to-ascending change in the finite-difference sign,
/// and no ascending-to-descending change.
fn unimodal(values: &[f64]) -> bool {
    let signs: Vec<bool> = values.windows(2).map(|w| w[1] > w[0]).collect();
    let up_turns = signs.windows(2).filter(|s| !s[0] && s[1]).count();
    let down_turns = signs.windows(2).filter(|s| s[0] && !s[1]).count();
    up_turns == 1 && down_turns == 0
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap()
}

fn quadrature_convergence() -> Outcome {
    let start = Instant::now();
    let geometry = BladeGeometry::reference();
    let aero = AeroModel::reference();
    let coarse = Propeller::with_stations(geometry.clone(), aero, 256).unwrap();
    let fine = Propeller::with_stations(geometry, aero, 512).unwrap();
    let mut worst: f64 = 0.0;
    for (n, beta, v) in [
        (100.0, 10.0, 0.0),
        (30.0, 5.0, 0.0),
        (60.0, 20.0, 3.0),
        (150.0, -3.0, 1.0),
        (45.0, 25.0, 10.0),
    ] {
        let op = OperatingPoint::new(n, deg(beta));
        let a = coarse.loads(&env(v), op);
        let b = fine.loads(&env(v), op);
        worst = worst
            .max(rel(a.thrust, b.thrust))
            .max(rel(a.torque, b.torque));
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(worst <= 1e-8, format!("max relative change {worst:.2e}"))?;
    check(elapsed < 1.0, format!("took {elapsed:.3} s"))?;
    Ok(format!(
        "max relative change {worst:.2e} in {:.1} ms",
        elapsed * 1e3
    ))
}

/// Bisection on `f(n) − target` down to a 1e-12 bracket.
fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn solver_residuals() -> Outcome {
    let prop = Propeller::reference();
    let mut worst_residual: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut count = 0;
    for (i, beta) in pitch_grid(deg(2.0), deg(25.0), 10).into_iter().enumerate() {
        for (j, thrust) in pitch_grid(0.05, 2.0, 10).into_iter().enumerate() {
            let e = env(if (i + j) % 2 == 0 { 0.0 } else { 3.0 });
            let thrust_of = |n: f64| prop.thrust(&e, OperatingPoint::new(n, beta));
            let n = prop
                .solve_speed_for_thrust(&e, beta, thrust)
                .map_err(|err| {
                    format!(
                        "thrust solve at β={:.2}°, T={thrust}: {err}",
                        beta.to_degrees()
                    )
                })?;
            worst_residual =
                worst_residual.max((thrust_of(n) - thrust).abs() / residual_tolerance(thrust));
            let oracle = bisect(thrust_of, thrust, 0.0, 500.0);
            worst_oracle = worst_oracle.max(rel(n, oracle));

            let power = prop.power(&e, OperatingPoint::new(n, beta));
            let power_of = |n: f64| prop.power(&e, OperatingPoint::new(n, beta));
            let m = prop
                .solve_speed_for_power(&e, beta, power)
                .map_err(|err| format!("power solve: {err}"))?;
            worst_residual =
                worst_residual.max((power_of(m) - power).abs() / residual_tolerance(power));
            worst_oracle = worst_oracle.max(rel(m, bisect(power_of, power, 0.0, 500.0)));
            count += 2;
        }
    }
    check(
        worst_residual <= 1.0,
        format!("residual at {worst_residual:.2} × tolerance"),
    )?;
    check(
        worst_oracle <= 1e-8,
        format!("oracle disagreement {worst_oracle:.2e}"),
    )?;
    Ok(format!(
        "{count} solves, worst residual {worst_residual:.2} × tolerance, oracle agreement {worst_oracle:.1e}"
    ))
}

fn power_identity() -> Outcome {
    let prop = Propeller::reference();
    for (n, beta, v) in [
        (100.0, 10.0, 0.0),
        (37.5, 3.0, 3.0),
        (0.0, 5.0, 4.0),
        (220.0, 24.0, 10.0),
    ] {
        let op = OperatingPoint::new(n, deg(beta));
        let e = env(v);
        check(
            prop.power(&e, op) == 2.0 * PI * n * prop.torque(&e, op),
            format!("P ≠ 2πnQ at n={n}"),
        )?;
    }

    let params = MotorParams::reference();
    let e = env(0.0);
    let load = PropellerLoad {
        propeller: &prop,
        env: e,
    };
    let mut worst: f64 = 0.0;
    for (k, (volts, beta)) in [
        (1.0, 5.0),
        (2.0, 5.0),
        (3.0, 9.0),
        (4.0, 9.0),
        (5.0, 12.0),
        (6.0, 15.0),
        (7.0, 20.0),
        (8.0, 25.0),
        (3.5, 0.0),
        (9.0, 2.0),
    ]
    .into_iter()
    .enumerate()
    {
        let beta = deg(beta);
        let mut s = MotorState::default();
        let dt = 1e-4;
        let mut settled = false;
        for _ in 0..200_000 {
            s = motor::step(s, volts, beta, dt, &params, &load).map_err(|e| e.to_string())?;
            let q = prop.torque(&e, OperatingPoint::new(s.rps(), beta));
            let d = motor::derivatives(s, volts, q, &params);
            if d.omega_dot.abs() <= 1e-6 * s.omega.abs()
                && d.current_dot.abs() <= 1e-6 * s.current.abs()
            {
                settled = true;
                break;
            }
        }
        check(settled, format!("point {k} did not settle"))?;
        let q = prop.torque(&e, OperatingPoint::new(s.rps(), beta));
        let (w, i) = (s.omega, s.current);
        let input = volts * i;
        let losses = params.resistance * i * i + params.viscous_friction * w * w + q * w;
        worst = worst.max(rel(losses, input));
    }
    check(worst <= 1e-6, format!("power balance off by {worst:.2e}"))?;
    Ok(format!(
        "P = 2πnQ bitwise; power balance within {worst:.1e} at 10 settled points"
    ))
}

fn rk4_order() -> Outcome {
    let start = Instant::now();
    let trajectory = |dt: f64| -> Result<Vec<f64>, String> {
        let cfg = PlantConfig {
            timing: SimTiming {
                dt,
                ..SimTiming::reference()
            },
            ..PlantConfig::reference()
        };
        let mut plant = SimulatedPlant::new(cfg).map_err(|e| e.to_string())?;
        let ramp = RampCommand::new(0.32, 1.6).unwrap();
        let samples = plant
            .run_ramp(deg(9.0), ramp, 0.4)
            .map_err(|e| e.to_string())?;
        Ok(samples.iter().map(|s| s.rpm).collect())
    };
    let reference = trajectory(1e-6)?;
    let mut errors = Vec::new();
    for dt in [1e-3, 5e-4, 2.5e-4] {
        let run = trajectory(dt)?;
        let err = run
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "errors {:.2e}/{:.2e}/{:.2e} rpm, orders {:.2}/{:.2}, {elapsed:.1} s",
        errors[0], errors[1], errors[2], orders[0], orders[1]
    );
    check(orders.iter().all(|&p| p >= 3.5), detail.clone())?;
    check(elapsed < 60.0, detail.clone())?;
    Ok(detail)
}

/// Pitch grid wide enough to contain the minimum at every airspeed tested.
fn wide_grid() -> Vec<f64> {
    pitch_grid(deg(-5.0), deg(80.0), 851)
}

/// Required power over the grid, restricted to the contiguous achievable run.
fn iso_thrust(
    prop: &Propeller,
    e: &Environment,
    thrust: f64,
) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut betas = Vec::new();
    let mut powers = Vec::new();
    let mut seen_gap = false;
    for beta in wide_grid() {
        match prop.required_power(e, beta, thrust) {
            Ok(p) => {
                if seen_gap && !betas.is_empty() {
                    return Err(format!(
                        "achievable region not contiguous at {:.1}°",
                        beta.to_degrees()
                    ));
                }
                betas.push(beta);
                powers.push(p);
            }
            Err(_) => seen_gap = !betas.is_empty() || seen_gap,
        }
    }
    if betas.len() < 3 {
        return Err(format!("thrust {thrust} N barely achievable"));
    }
    Ok((betas, powers))
}

fn airspeed_sweep() -> Outcome {
    let prop = Propeller::reference();
    let mut minima = Vec::new();
    for v in [1.0, 4.0, 10.0] {
        let (betas, powers) = iso_thrust(&prop, &env(v), 0.3)?;
        check(unimodal(&powers), format!("V={v}: not unimodal"))?;
        minima.push(betas[argmin(&powers)].to_degrees());
    }
    check(
        minima.windows(2).all(|w| w[1] >= w[0]),
        format!("argmin not non-decreasing: {minima:?}"),
    )?;
    Ok(format!(
        "unimodal over [-5°, 80°]; argmin {:.1}°/{:.1}°/{:.1}° at V = 1/4/10 m/s",
        minima[0], minima[1], minima[2]
    ))
}

fn iso_thrust_surface() -> Outcome {
    let prop = Propeller::reference();
    let e = env(3.0);
    let mut minima = Vec::new();
    for thrust in [0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5] {
        let (betas, powers) = iso_thrust(&prop, &e, thrust)?;
        check(unimodal(&powers), format!("T={thrust}: no unique minimum"))?;
        let k = argmin(&powers);
        // the surface point at the slice minimum returns the slice thrust
        let back = prop
            .thrust_from_power(&e, betas[k], powers[k])
            .map_err(|err| err.to_string())?;
        check(
            rel(back, thrust) <= 1e-8,
            format!("surface round trip {back} vs {thrust}"),
        )?;
        minima.push(format!("{:.1}°", betas[k].to_degrees()));
    }
    Ok(format!(
        "7 slices at V = 3 m/s, minima {}",
        minima.join(" ")
    ))
}

fn betas_deg(trace: &OptimizationTrace) -> Vec<f64> {
    trace
        .records
        .iter()
        .map(|r| (r.beta.to_degrees() * 1e6).round() / 1e6)
        .collect()
}

fn steps_deg(trace: &OptimizationTrace) -> Vec<f64> {
    trace
        .records
        .iter()
        .map(|r| (r.step.to_degrees() * 1e6).round() / 1e6)
        .collect()
}

fn golden_traces() -> Outcome {
    let limits = PlantLimits::reference();
    // saturated start, then falling, rising, falling, equal powers
    let script = vec![
        (14.0, true),
        (14.0, true),
        (3.0, false),
        (2.0, false),
        (2.5, false),
        (2.1, false),
        (2.1, false),
        (2.4, false),
    ];
    let mut cfg = OptimizerConfig::reference_fixed();
    cfg.max_calls = script.len();
    let mut plant = ScriptedPlant::new(limits, script.clone());
    let t = fixed_step_optimize(&mut plant, &cfg).map_err(|e| e.to_string())?;
    let dirs: Vec<i8> = t.records.iter().map(|r| r.direction).collect();
    check(
        dirs == [1, 1, 1, 1, 1, -1, 1, -1],
        format!("fixed directions {dirs:?}"),
    )?;
    check(
        betas_deg(&t) == [0.59, 1.18, 1.77, 2.36, 2.95, 2.36, 2.95, 2.36],
        format!("fixed pitches {:?}", betas_deg(&t)),
    )?;
    check(
        steps_deg(&t).iter().all(|&s| s == 0.59),
        "fixed step changed",
    )?;

    let mut cfg = OptimizerConfig::reference_variable();
    cfg.max_calls = script.len();
    let mut plant = ScriptedPlant::new(limits, script);
    let t = variable_step_optimize(&mut plant, &cfg).map_err(|e| e.to_string())?;
    let dirs: Vec<i8> = t.records.iter().map(|r| r.direction).collect();
    check(
        dirs == [1, 1, 1, 1, 1, -1, 1, -1],
        format!("variable directions {dirs:?}"),
    )?;
    check(
        steps_deg(&t) == [1.77, 1.77, 1.77, 1.77, 1.77, 1.18, 0.59, 0.59],
        format!("variable steps {:?}", steps_deg(&t)),
    )?;
    check(
        betas_deg(&t) == [0.59, 2.36, 4.13, 5.9, 7.67, 6.49, 7.08, 6.49],
        format!("variable pitches {:?}", betas_deg(&t)),
    )?;
    Ok("both algorithms match hand-computed traces (saturation branch, tie, shrink)".into())
}

fn hill_climb_optimality() -> Outcome {
    let start = Instant::now();
    let lattice: Vec<f64> = (-8..=42).map(|k| deg(0.59 * k as f64)).collect();
    let mut oracle_plant = SimulatedPlant::reference();
    let oracle =
        grid_search_optimum(&mut oracle_plant, &lattice, 0.52).map_err(|e| e.to_string())?;

    let run = |variable: bool| -> Result<OptimizationTrace, String> {
        let mut cfg = if variable {
            OptimizerConfig::reference_variable()
        } else {
            OptimizerConfig::reference_fixed()
        };
        cfg.max_time = 120.0;
        let mut plant = SimulatedPlant::reference();
        let trace = if variable {
            variable_step_optimize(&mut plant, &cfg)
        } else {
            fixed_step_optimize(&mut plant, &cfg)
        };
        trace.map_err(|e| e.to_string())
    };
    let fixed = run(false)?;
    let variable = run(true)?;
    let step = deg(0.59);
    let tol = step + 1e-9;
    let fixed_end = fixed.terminal().unwrap().beta;
    let variable_end = variable.terminal().unwrap().beta;
    let fixed_reach = fixed.first_within(oracle.beta, tol);
    let variable_reach = variable.first_within(oracle.beta, tol);
    let calls = |c: Option<usize>| c.map_or("never".to_owned(), |n| format!("{n} calls"));
    let detail = format!(
        "oracle {:.2}°; fixed ends {:.2}° (first within a step after {}), variable ends {:.2}° (after {}); {:.0} s wall",
        oracle.beta.to_degrees(),
        fixed_end.to_degrees(),
        calls(fixed_reach),
        variable_end.to_degrees(),
        calls(variable_reach),
        start.elapsed().as_secs_f64(),
    );
    check((fixed_end - oracle.beta).abs() <= tol, detail.clone())?;
    check((variable_end - oracle.beta).abs() <= tol, detail.clone())?;
    match (variable_reach, fixed_reach) {
        (Some(v), Some(f)) if v < f => Ok(detail),
        _ => Err(detail),
    }
}

fn saturation_behavior() -> Outcome {
    let mut plant = SimulatedPlant::reference();
    let m = plant
        .set_propeller(deg(0.59), 0.52)
        .map_err(|e| e.to_string())?;
    check(m.saturated, format!("not saturated: {m:?}"))?;
    let mut escapes = Vec::new();
    for variable in [false, true] {
        let mut cfg = if variable {
            OptimizerConfig::reference_variable()
        } else {
            OptimizerConfig::reference_fixed()
        };
        cfg.max_calls = 25;
        let mut plant = SimulatedPlant::reference();
        let t = if variable {
            variable_step_optimize(&mut plant, &cfg)
        } else {
            fixed_step_optimize(&mut plant, &cfg)
        }
        .map_err(|e| e.to_string())?;
        check(t.records[0].saturated, "first call not saturated")?;
        let clear = t
            .records
            .iter()
            .position(|r| !r.saturated)
            .ok_or("never left saturation")?;
        check(
            t.records[..=clear]
                .windows(2)
                .all(|w| w[1].beta > w[0].beta),
            "pitch did not increase while saturated",
        )?;
        escapes.push(format!("{:.2}°", t.records[clear].beta.to_degrees()));
    }
    Ok(format!(
        "saturated at 0.59° ({:.2} W, {:.3} N); clears at {} (fixed) and {} (variable)",
        m.power, m.thrust, escapes[0], escapes[1]
    ))
}

fn ramp_tracking() -> Outcome {
    let mut plant = SimulatedPlant::reference();
    let target = 0.32;
    let ramp = RampCommand::new(target, 1.6).unwrap();
    let samples = plant
        .run_ramp(deg(9.0), ramp, 15.0)
        .map_err(|e| e.to_string())?;
    let peak = samples
        .iter()
        .map(|s| s.thrust_measured)
        .fold(0.0, f64::max);
    let overshoot = (peak - target) / target;
    let settle = samples
        .iter()
        .rposition(|s| (s.thrust_measured - target).abs() > 0.05 * target)
        .map_or(0.0, |i| samples[i].time);
    let detail = format!(
        "settled within 5% at {settle:.3} s, overshoot {:.2}%",
        overshoot * 100.0
    );
    check(settle <= 10.0 && overshoot <= 0.20, detail.clone())?;
    Ok(detail)
}

fn calibration_maps() -> Outcome {
    let c = Calibration::rig();
    check(c.pitch_deg(135.0) == 0.0, "servo 135 is not 0°")?;
    check(
        c.thrust(49.36 / 4.11).abs() <= 1e-15,
        "load-cell zero crossing",
    )?;
    check(
        c.supply_voltage.scale == 0.0202 && c.supply_voltage.offset == -0.0237,
        "voltage map",
    )?;
    check(
        c.current.scale == 4.1532 && c.current.offset == -1826.67,
        "current map",
    )?;
    check(
        c.thrust.scale == 9.81 * 4.11 / 1000.0 && c.thrust.offset == -9.81 * 49.36 / 1000.0,
        "thrust map",
    )?;
    check(
        c.pitch.scale == 0.59 && c.pitch.offset == -0.59 * 135.0,
        "pitch map",
    )?;
    let mut worst: f64 = 0.0;
    for map in [c.supply_voltage, c.current, c.thrust, c.pitch] {
        for k in -200..=200 {
            let x = k as f64 * 7.3;
            worst = worst.max((map.invert(map.apply(x)) - x).abs() / x.abs().max(1.0));
        }
    }
    check(worst <= 1e-12, format!("round trip {worst:.2e}"))?;
    Ok(format!(
        "rig constants exact; round trip within {worst:.1e}"
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("quadrature convergence", quadrature_convergence),
        ("solver residuals", solver_residuals),
        ("power identity and balance", power_identity),
        ("RK4 order on closed loop", rk4_order),
        ("power vs pitch across airspeeds", airspeed_sweep),
        ("iso-thrust minima on the power surface", iso_thrust_surface),
        ("algorithm golden traces", golden_traces),
        ("hill-climb optimality", hill_climb_optimality),
        ("saturation and escape", saturation_behavior),
        ("closed-loop ramp tracking", ramp_tracking),
        ("calibration maps", calibration_maps),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_owned()));
        match outcome {
            Ok(detail) => println!("AC{:02} PASS {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("AC{:02} FAIL {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
