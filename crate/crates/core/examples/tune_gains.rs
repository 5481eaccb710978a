//! Grid search over PID gains on the reference plant.
//!
//! Each candidate tracks a 0.32 N ramp at several pitches and is scored by
//! the integrated absolute thrust error; candidates that overshoot by more
//! than 10% or fail to settle within 5% by 10 s are discarded, as are those
//! whose proportional gain turns 0.01 N of load-cell noise into more than
//! 0.1 V of command ripple.
//!
//! ```text
//! cargo run --release -p pitchopt-core --example tune_gains
//! ```

use pitchopt_core::control::{PidGains, RampCommand};
use pitchopt_core::plant::{PlantConfig, SimulatedPlant};

const NOISE_N: f64 = 0.01;
const MAX_RIPPLE_V: f64 = 0.1;

struct Score {
    iae: f64,
    overshoot: f64,
    settle: f64,
}

fn evaluate(gains: PidGains, beta_deg: f64) -> Option<Score> {
    let cfg = PlantConfig {
        gains,
        ..PlantConfig::reference()
    };
    let mut plant = SimulatedPlant::new(cfg).ok()?;
    let target = 0.32;
    let ramp = RampCommand::new(target, 1.6).ok()?;
    let samples = plant.run_ramp(beta_deg.to_radians(), ramp, 10.0).ok()?;
    let period = 1e-3;
    let iae = samples
        .iter()
        .map(|s| (s.thrust_measured - s.thrust_command).abs() * period)
        .sum();
    let peak = samples
        .iter()
        .map(|s| s.thrust_measured)
        .fold(0.0, f64::max);
    let last_out = samples
        .iter()
        .rposition(|s| (s.thrust_measured - target).abs() > 0.05 * target)?;
    Some(Score {
        iae,
        overshoot: (peak - target) / target,
        settle: samples[last_out].time,
    })
}

fn main() {
    let pitches = [3.0, 9.0, 15.0, 22.0];
    let mut candidates = Vec::new();
    for kp in [2.0, 4.0, 8.0, 16.0, 32.0] {
        for ki in [40.0, 80.0, 160.0, 320.0, 640.0] {
            for kd in [0.0] {
                if kp * NOISE_N > MAX_RIPPLE_V {
                    continue;
                }
                candidates.push(PidGains::new(kp, ki, kd, 12.0).expect("valid gains"));
            }
        }
    }
    let mut scored: Vec<(f64, PidGains)> = candidates
        .into_iter()
        .filter_map(|gains| {
            let mut total = 0.0;
            for &b in &pitches {
                let s = evaluate(gains, b)?;
                if s.overshoot > 0.10 || s.settle > 10.0 {
                    return None;
                }
                total += s.iae;
            }
            Some((total, gains))
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (iae, g) in scored.iter().take(10) {
        println!(
            "kp = {:<5} ki = {:<5} kd = {:<5} iae = {iae:.5}",
            g.kp, g.ki, g.kd
        );
    }
    if scored.is_empty() {
        println!("no candidate met the overshoot and settling limits");
    }
}
