//! `pitchopt`: CSV front end for the propeller model, the closed-loop plant and
//! the pitch optimizers. Angles are degrees on the command line and in every
//! CSV column whose name ends in `_deg`; everything else is SI.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pitchopt_core::config::RunConfig;
use pitchopt_core::control::RampCommand;
use pitchopt_core::optimizer::{optimize, Algorithm, OptimizationTrace, OptimizeError};
use pitchopt_core::plant::SimulatedPlant;
use pitchopt_core::propeller::OperatingPoint;
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "pitchopt",
    version,
    about = "Variable-pitch propeller simulation and pitch optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shaft power needed to hold a thrust, over pitch and airspeed.
    Sweep(SweepArgs),
    /// Thrust produced for each (shaft power, pitch) pair at one airspeed.
    Surface(SurfaceArgs),
    /// Run a pitch optimizer on the simulated plant and write its trace.
    Optimize(OptimizeArgs),
    /// Closed-loop time series at fixed pitch for a ramped thrust command.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// Configuration file; absent keys take reference values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Commanded thrust, N.
    #[arg(long)]
    thrust: f64,
    /// Comma-separated airspeeds, m/s.
    #[arg(long, value_delimiter = ',', required = true)]
    airspeeds: Vec<f64>,
    /// Pitch grid lo:hi:step, degrees.
    #[arg(long, allow_hyphen_values = true)]
    beta_range: Range,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SurfaceArgs {
    /// Shaft power grid lo:hi:step, W.
    #[arg(long)]
    power_range: Range,
    /// Pitch grid lo:hi:step, degrees.
    #[arg(long, allow_hyphen_values = true)]
    beta_range: Range,
    /// Airspeed, m/s.
    #[arg(long)]
    airspeed: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Fixed,
    Variable,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long, value_enum)]
    algorithm: AlgorithmArg,
    /// Half-width of the uniform thrust measurement noise, N.
    #[arg(long)]
    noise: Option<f64>,
    /// Noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Plant-call budget; overrides the configured one.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Simulated-time budget, s; overrides the configured one.
    #[arg(long)]
    max_time: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateArgs {
    /// Pitch, degrees.
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    /// Commanded thrust at the end of the ramp, N.
    #[arg(long)]
    thrust: f64,
    /// Simulated duration, s.
    #[arg(long)]
    duration: f64,
    /// Half-width of the uniform thrust measurement noise, N.
    #[arg(long)]
    noise: Option<f64>,
    /// Noise seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

/// Inclusive `lo:hi:step` grid.
#[derive(Clone, Copy, Debug)]
struct Range {
    lo: f64,
    hi: f64,
    step: f64,
}

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts[..] else {
            return Err(format!("expected lo:hi:step, got {s:?}"));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("{x:?} is not a finite number"))
        };
        let range = Range {
            lo: num(lo)?,
            hi: num(hi)?,
            step: num(step)?,
        };
        if range.step <= 0.0 {
            return Err(format!("step must be positive, got {}", range.step));
        }
        if range.hi < range.lo {
            return Err(format!("empty range: {} > {}", range.lo, range.hi));
        }
        Ok(range)
    }
}

impl Range {
    fn points(&self) -> Vec<f64> {
        // the tolerance keeps `hi` when it is a whole number of steps away
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.lo + self.step * k as f64).collect()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Surface(a) => surface(a),
        Command::Optimize(a) => run_optimize(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(RunConfig::reference()),
    }
}

fn writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let out: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(out))
}

fn finite(name: &str, x: f64) -> Result<f64> {
    ensure!(x.is_finite(), "{name} must be finite, got {x}");
    Ok(x)
}

/// Empty optional cells for rows the model cannot reach.
fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn sweep(a: SweepArgs) -> Result<()> {
    let cfg = load_config(a.common.config.as_deref())?;
    finite("thrust", a.thrust)?;
    ensure!(
        a.thrust >= 0.0,
        "thrust must be non-negative, got {}",
        a.thrust
    );
    let prop = &cfg.plant.propeller;
    let envs = a
        .airspeeds
        .iter()
        .map(|&v| {
            cfg.plant
                .environment
                .with_airspeed(v)
                .with_context(|| format!("airspeed {v}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let betas = a.beta_range.points();
    let grid: Vec<(usize, f64)> = (0..envs.len())
        .flat_map(|i| betas.iter().map(move |&b| (i, b)))
        .collect();

    let rows: Vec<_> = grid
        .par_iter()
        .map(|&(i, beta_deg)| {
            let env = &envs[i];
            let beta = beta_deg.to_radians();
            let solved = prop.solve_speed_for_thrust(env, beta, a.thrust).ok();
            let power = solved.map(|n| prop.power(env, OperatingPoint::new(n, beta)));
            (env.airspeed, beta_deg, power, solved)
        })
        .collect();

    let mut w = writer(a.common.output.as_deref())?;
    w.write_record(["airspeed_m_s", "beta_deg", "power_W", "rps", "achievable"])?;
    for (v, beta_deg, power, rps) in rows {
        w.write_record([
            v.to_string(),
            beta_deg.to_string(),
            cell(power),
            cell(rps),
            rps.is_some().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn surface(a: SurfaceArgs) -> Result<()> {
    let cfg = load_config(a.common.config.as_deref())?;
    let prop = &cfg.plant.propeller;
    let env = cfg
        .plant
        .environment
        .with_airspeed(a.airspeed)
        .with_context(|| format!("airspeed {}", a.airspeed))?;
    ensure!(a.power_range.lo >= 0.0, "power range must be non-negative");
    let betas = a.beta_range.points();
    let grid: Vec<(f64, f64)> = a
        .power_range
        .points()
        .into_iter()
        .flat_map(|p| betas.iter().map(move |&b| (p, b)))
        .collect();

    let rows: Vec<_> = grid
        .par_iter()
        .map(|&(power, beta_deg)| {
            let thrust = prop
                .thrust_from_power(&env, beta_deg.to_radians(), power)
                .ok();
            (power, beta_deg, thrust)
        })
        .collect();

    let mut w = writer(a.common.output.as_deref())?;
    w.write_record(["power_W", "beta_deg", "thrust_N"])?;
    for (power, beta_deg, thrust) in rows {
        w.write_record([power.to_string(), beta_deg.to_string(), cell(thrust)])?;
    }
    w.flush()?;
    Ok(())
}

fn run_optimize(a: OptimizeArgs) -> Result<()> {
    let mut cfg = load_config(a.common.config.as_deref())?;
    if let Some(noise) = a.noise {
        cfg.plant.noise = finite("noise", noise)?;
    }
    if let Some(seed) = a.seed {
        cfg.plant.seed = seed;
    }
    let (algorithm, mut opt) = match a.algorithm {
        AlgorithmArg::Fixed => (Algorithm::FixedStep, cfg.fixed),
        AlgorithmArg::Variable => (Algorithm::VariableStep, cfg.variable),
    };
    if let Some(calls) = a.max_iterations {
        opt.max_calls = calls;
    }
    if let Some(t) = a.max_time {
        opt.max_time = finite("max-time", t)?;
    }
    let mut plant = SimulatedPlant::new(cfg.plant).context("plant configuration")?;

    let (trace, failure) = match optimize(&mut plant, &opt, algorithm) {
        Ok(trace) => (trace, None),
        Err(OptimizeError::Aborted { trace, source }) => (trace, Some(source)),
        Err(e) => return Err(e.into()),
    };
    write_trace(&trace, a.common.output.as_deref())?;
    if let Some(source) = failure {
        bail!("plant failed after {} calls: {source}", trace.plant_calls());
    }

    match trace.terminal() {
        Some(last) => eprintln!(
            "terminal beta {:.4} deg, terminal power {:.6} W, plant calls {}, stop {:?}",
            last.beta.to_degrees(),
            last.power,
            trace.plant_calls(),
            trace.stop
        ),
        None => eprintln!("no plant calls made (stop {:?})", trace.stop),
    }
    Ok(())
}

fn write_trace(trace: &OptimizationTrace, path: Option<&Path>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "iter",
        "t_s",
        "beta_deg",
        "power_W",
        "thrust_N",
        "direction",
        "step_deg",
        "saturated",
    ])?;
    for r in &trace.records {
        w.write_record([
            r.iteration.to_string(),
            r.time.to_string(),
            r.beta.to_degrees().to_string(),
            r.power.to_string(),
            r.thrust.to_string(),
            r.direction.to_string(),
            r.step.to_degrees().to_string(),
            r.saturated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = load_config(a.common.config.as_deref())?;
    if let Some(noise) = a.noise {
        cfg.plant.noise = finite("noise", noise)?;
    }
    if let Some(seed) = a.seed {
        cfg.plant.seed = seed;
    }
    finite("beta", a.beta)?;
    finite("thrust", a.thrust)?;
    ensure!(
        a.thrust >= 0.0,
        "thrust must be non-negative, got {}",
        a.thrust
    );
    ensure!(
        a.duration.is_finite() && a.duration >= 0.0,
        "duration must be finite and non-negative, got {}",
        a.duration
    );
    let command = RampCommand {
        start: 0.0,
        target: a.thrust,
        duration: cfg.plant.timing.ramp_duration,
    };
    let mut plant = SimulatedPlant::new(cfg.plant).context("plant configuration")?;
    let samples = plant.run_ramp(a.beta.to_radians(), command, a.duration)?;

    let mut w = writer(a.common.output.as_deref())?;
    w.write_record(["t_s", "T_cmd_N", "T_meas_N", "rpm", "v_V", "i_A", "power_W"])?;
    for s in &samples {
        w.write_record([
            s.time.to_string(),
            s.thrust_command.to_string(),
            s.thrust_measured.to_string(),
            s.rpm.to_string(),
            s.voltage.to_string(),
            s.current.to_string(),
            s.power.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
