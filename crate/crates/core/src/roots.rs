//! Bracketed scalar root finding: regula falsi with the Illinois
//! modification, falling back to bisection whenever the interpolated point
//! would not shrink the bracket fast enough.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Absolute tolerance on `|f(x)|` required of the returned point.
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            ftol: 1e-12,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Find a root of `f` in `[a, b]` where `f(a)` and `f(b)` have opposite signs.
///
/// Iterates until the bracket collapses to adjacent floats (or `f` vanishes),
/// then returns the endpoint with the smaller residual. Fails if that residual
/// still exceeds `opts.ftol`.
pub fn find_root<F>(mut f: F, a: f64, b: f64, opts: RootOptions) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Convergence(format!(
            "no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}"
        )));
    }

    // side of the last retained endpoint, for the Illinois halving
    let mut side = 0i8;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let width = b - a;
        if width <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        // keep the secant point well inside the bracket, otherwise bisect
        let guard = 0.01 * width;
        if !x.is_finite() || x <= a + guard || x >= b - guard {
            x = 0.5 * (a + b);
        }
        if x <= a || x >= b {
            break;
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(Root { x, fx, iterations });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }

    // the Illinois scaling distorts the stored values; re-evaluate
    let fa = f(a)?;
    let fb = f(b)?;
    let best = if fa.abs() <= fb.abs() {
        Root { x: a, fx: fa, iterations }
    } else {
        Root { x: b, fx: fb, iterations }
    };
    if best.fx.abs() > opts.ftol {
        return Err(Error::Convergence(format!(
            "residual {} at x={} exceeds tolerance {} after {} iterations",
            best.fx, best.x, opts.ftol, iterations
        )));
    }
    Ok(best)
}

/// Number of strict sign changes of `f` on a uniform grid of `n` points over
/// `[a, b]`. Points where `f` fails to evaluate are skipped.
pub fn count_sign_changes<F>(mut f: F, a: f64, b: f64, n: usize) -> usize
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut changes = 0;
    let mut prev: Option<f64> = None;
    for i in 0..n {
        let x = a + (b - a) * i as f64 / (n - 1) as f64;
        let Ok(fx) = f(x) else { continue };
        if fx == 0.0 || !fx.is_finite() {
            continue;
        }
        if let Some(p) = prev {
            if p.signum() != fx.signum() {
                changes += 1;
            }
        }
        prev = Some(fx);
    }
    changes
}
