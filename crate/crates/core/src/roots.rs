//! Bracketed inversion of a scalar map that is increasing above its last
//! crossing of the target.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub(crate) enum RootError {
    #[error(
        "target {target} exceeds the value {reached} reached at the bracket ceiling {ceiling}"
    )]
    Unachievable {
        target: f64,
        reached: f64,
        ceiling: f64,
    },
    #[error("map is not monotone across the target on [0, {hi}]")]
    NonMonotonic { hi: f64 },
}

/// Number of samples used to validate the bracket before refining it.
const VALIDATION_SAMPLES: usize = 16;
const MAX_ITERATIONS: usize = 200;
/// Refinement aims this far inside the acceptance tolerance so that two
/// inversions of the same map (speed from thrust, speed from power) compose
/// to well under the tolerance.
const POLISH: f64 = 1e-3;

/// Finds `x >= 0` with `|f(x) - target| <= tol`.
///
/// The bracket starts at `[0, initial_hi]` and doubles until `f(hi) > target`
/// or `hi` reaches `ceiling`. The bracket is then sampled: the sign of
/// `f - target` must change exactly once (negative to positive) and `f` must be
/// strictly increasing from the sample before the crossing onward. Values of
/// `f` below the target away from the crossing (e.g. a windmilling dip) are
/// allowed.
pub(crate) fn invert_increasing<F>(
    f: F,
    target: f64,
    initial_hi: f64,
    ceiling: f64,
    tol: f64,
) -> Result<f64, RootError>
where
    F: Fn(f64) -> f64,
{
    let g = |x: f64| f(x) - target;

    let g0 = g(0.0);
    if g0.abs() <= tol {
        return Ok(0.0);
    }
    let mut hi = initial_hi.min(ceiling);
    let mut g_hi = g(hi);
    while g_hi <= 0.0 {
        if g_hi.abs() <= tol {
            return Ok(hi);
        }
        if hi >= ceiling {
            return Err(RootError::Unachievable {
                target,
                reached: g_hi + target,
                ceiling,
            });
        }
        hi = (2.0 * hi).min(ceiling);
        g_hi = g(hi);
    }
    if g0 > 0.0 {
        return Err(RootError::NonMonotonic { hi });
    }

    let xs: Vec<f64> = (0..=VALIDATION_SAMPLES)
        .map(|j| hi * j as f64 / VALIDATION_SAMPLES as f64)
        .collect();
    let gs: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(j, &x)| match j {
            0 => g0,
            j if j == VALIDATION_SAMPLES => g_hi,
            _ => g(x),
        })
        .collect();
    let crossings = gs
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count();
    if crossings != 1 {
        return Err(RootError::NonMonotonic { hi });
    }
    let k = gs
        .windows(2)
        .position(|w| w[0] <= 0.0 && w[1] > 0.0)
        .expect("one crossing");
    if gs[k..].windows(2).any(|w| w[1] <= w[0]) {
        return Err(RootError::NonMonotonic { hi });
    }

    Ok(refine(&g, xs[k], gs[k], xs[k + 1], gs[k + 1], tol))
}

/// Illinois-modified regula falsi; bisects whenever the interpolant falls
/// outside the open bracket. Stops at `tol·POLISH` or when the bracket
/// collapses, returning the best point seen.
fn refine<G: Fn(f64) -> f64>(
    g: &G,
    mut a: f64,
    mut ga: f64,
    mut b: f64,
    mut gb: f64,
    tol: f64,
) -> f64 {
    let tol = tol * POLISH;
    if ga.abs() <= tol {
        return a;
    }
    if gb.abs() <= tol {
        return b;
    }
    // -1: last update replaced `a`, +1: replaced `b`
    let mut side = 0i8;
    let (mut best, mut g_best) = if ga.abs() < gb.abs() {
        (a, ga)
    } else {
        (b, gb)
    };
    for _ in 0..MAX_ITERATIONS {
        let mut x = b - gb * (b - a) / (gb - ga);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let gx = g(x);
        if gx.abs() <= tol {
            return x;
        }
        if gx.abs() < g_best.abs() {
            best = x;
            g_best = gx;
        }
        if gx < 0.0 {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(1e-300) {
            break;
        }
    }
    best
}
