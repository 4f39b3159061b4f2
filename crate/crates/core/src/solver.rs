//! The scalar free-boundary equation for the bond/stock ratio constant `c`.
//!
//! Once `c` is known, the reflection boundary `s_bar` follows in closed form
//! and with it both edges of the no-trade region. The equation `f(c) = 0` has
//! a unique root on a bracket that depends on the regime of `theta`:
//!
//! | regime            | bracket for `c`                          |
//! |-------------------|------------------------------------------|
//! | `theta <= 1/2`    | `((1-theta)/theta, inf)`                 |
//! | `1/2 < theta < 1` | `((1-theta)/theta, (1-theta)/(theta-1/2))` |
//! | `theta > 1`       | `((1-theta)/theta, 0)`                   |
//!
//! `f` equals `-lambda/(1-lambda)` at the left edge and blows up at the right.

use crate::error::{domain, Error, Result};
use crate::model::{MarketParams, Regime};
use crate::roots::{count_sign_changes, find_root, RootOptions};

/// Absolute tolerance on `|f(c)|` at the returned root.
pub const ROOT_FTOL: f64 = 1e-12;
pub const ROOT_MAX_ITER: usize = 200;
/// Grid size of the post-solve uniqueness scan.
pub const SCAN_POINTS: usize = 1000;

const EDGE_OFFSET: f64 = 1e-9;
/// Rounding allowance on the left bracket edge, which is only known up to
/// the rounding of `theta`.
const LEFT_SLACK: f64 = 1e-14;
const MAX_DOUBLINGS: usize = 60;

/// Solved constants for one `(theta, lambda)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionSolution {
    pub params: MarketParams,
    /// Ratio of bond holdings to `m` times stock holdings.
    pub c: f64,
    /// Reflection boundary of `S/m`; `+inf` for `theta == 1`.
    pub s_bar: f64,
    /// No-trade region in terms of the ask price.
    pub pi_lo: f64,
    pub pi_hi: f64,
    /// No-trade region in terms of the shadow price.
    pub shadow_pi_lo: f64,
    pub shadow_pi_hi: f64,
    /// Residual `f(c)` at the returned root (0 for the degenerate case).
    pub residual: f64,
}

impl FrictionSolution {
    /// `theta == 1`: never trade after converting everything into stock.
    pub fn degenerate(params: MarketParams) -> FrictionSolution {
        FrictionSolution {
            params,
            c: 0.0,
            s_bar: f64::INFINITY,
            pi_lo: 1.0,
            pi_hi: 1.0,
            shadow_pi_lo: 1.0,
            shadow_pi_hi: 1.0,
            residual: 0.0,
        }
    }

    fn from_root(params: MarketParams, c: f64, residual: f64) -> Result<FrictionSolution> {
        let s_bar = s_bar_of_c(c, &params)?;
        let lambda = params.lambda();
        Ok(FrictionSolution {
            params,
            c,
            s_bar,
            pi_lo: 1.0 / (1.0 + c),
            pi_hi: 1.0 / (1.0 + c / s_bar),
            shadow_pi_lo: 1.0 / (1.0 + c),
            shadow_pi_hi: 1.0 / (1.0 + c / ((1.0 - lambda) * s_bar)),
            residual,
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.params.regime() == Regime::Unit
    }

    pub fn theta(&self) -> f64 {
        self.params.theta()
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda()
    }

    /// `shadow_pi_lo + shadow_pi_hi - 2 theta`; vanishes analytically.
    pub fn symmetry_residual(&self) -> f64 {
        self.shadow_pi_lo + self.shadow_pi_hi - 2.0 * self.theta()
    }

    /// Width of the no-trade region in terms of the ask price.
    pub fn width(&self) -> f64 {
        self.pi_hi - self.pi_lo
    }

    /// Closed reflection domain of `S/m` as `(low, high)`.
    pub fn domain(&self) -> (f64, f64) {
        if self.params.regime().is_leveraged() {
            (self.s_bar, 1.0)
        } else {
            (1.0, self.s_bar)
        }
    }
}

/// Open bracket `(left, right)` containing the root; `right` is `None` when
/// the bracket is unbounded.
pub fn bracket(params: &MarketParams) -> Result<(f64, Option<f64>)> {
    let theta = params.theta();
    let left = if params.regime() == Regime::Half {
        1.0
    } else {
        (1.0 - theta) / theta
    };
    match params.regime() {
        Regime::Unit => Err(unit_regime()),
        Regime::LowTheta | Regime::Half => Ok((left, None)),
        Regime::MidTheta => Ok((left, Some((1.0 - theta) / (theta - 0.5)))),
        Regime::HighTheta => Ok((left, Some(0.0))),
    }
}

fn unit_regime() -> Error {
    Error::UnsupportedRegime(
        "theta = 1 has no free boundary; use FrictionSolution::degenerate".into(),
    )
}

fn check_in_bracket(c: f64, params: &MarketParams) -> Result<()> {
    let (left, right) = bracket(params)?;
    let slack = LEFT_SLACK * left.abs().max(1.0);
    let inside = c.is_finite() && c >= left - slack && right.map_or(true, |r| c < r);
    if !inside {
        return domain(format!(
            "c={c} outside the bracket [{left}, {})",
            right.map_or("inf".to_string(), |r| r.to_string())
        ));
    }
    Ok(())
}

/// Log of the common base `c / ((2θ-1+2cθ)(2-2θ-c(2θ-1)))` of the general branch.
fn log_base(c: f64, theta: f64) -> Result<f64> {
    let a = 2.0 * theta - 1.0 + 2.0 * c * theta;
    let b = 2.0 - 2.0 * theta - c * (2.0 * theta - 1.0);
    let base = c / (a * b);
    if !(base > 0.0) || !base.is_finite() {
        return domain(format!("non-positive base {base} at c={c}, theta={theta}"));
    }
    Ok(base.ln())
}

/// The free-boundary equation `f(c)`.
pub fn friction_gap(c: f64, params: &MarketParams) -> Result<f64> {
    check_in_bracket(c, params)?;
    let theta = params.theta();
    let scale = 1.0 / (1.0 - params.lambda());
    if params.regime() == Regime::Half {
        return Ok(((c * c - 1.0) / c).exp() - c * c * scale);
    }
    let a = 2.0 * theta - 1.0 + 2.0 * c * theta;
    let exponent = (1.0 - theta) / (theta - 0.5);
    Ok((exponent * log_base(c, theta)?).exp() - a * a * scale)
}

/// Reflection boundary as a function of `c`.
pub fn s_bar_of_c(c: f64, params: &MarketParams) -> Result<f64> {
    check_in_bracket(c, params)?;
    let theta = params.theta();
    if params.regime() == Regime::Half {
        return Ok(((c * c - 1.0) / c).exp());
    }
    Ok((log_base(c, theta)? / (2.0 * theta - 1.0)).exp())
}

/// Search interval `[lo, hi]` with `f(lo) < 0 < f(hi)`.
fn search_interval(params: &MarketParams) -> Result<(f64, f64)> {
    let (left, right) = bracket(params)?;
    let f = |c: f64| friction_gap(c, params);
    match right {
        None => {
            let lo = left + EDGE_OFFSET * left.abs().max(1.0);
            let mut step = 1.0;
            for _ in 0..=MAX_DOUBLINGS {
                let hi = left + step;
                if f(hi)? > 0.0 {
                    return Ok((lo, hi));
                }
                step *= 2.0;
            }
            Err(Error::Convergence(format!(
                "f stayed negative up to c={}",
                left + step
            )))
        }
        Some(right) => {
            let width = right - left;
            let lo = left + EDGE_OFFSET * width;
            let mut offset = EDGE_OFFSET;
            while offset >= 1e-15 {
                let hi = right - offset * width;
                if hi > lo {
                    if let Ok(v) = f(hi) {
                        if v > 0.0 {
                            return Ok((lo, hi));
                        }
                    }
                }
                offset *= 0.1;
            }
            Err(Error::Convergence(format!(
                "no positive value of f found near the right edge {right}"
            )))
        }
    }
}

/// Number of sign changes of `f` on a uniform `n`-point grid over the search
/// interval. Exactly one is expected.
pub fn scan_sign_changes(params: &MarketParams, n: usize) -> Result<usize> {
    let (lo, hi) = search_interval(params)?;
    Ok(count_sign_changes(|c| friction_gap(c, params), lo, hi, n))
}

/// Solve `f(c) = 0` and derive `s_bar` and the no-trade boundaries.
pub fn solve_c(params: &MarketParams) -> Result<FrictionSolution> {
    if params.regime() == Regime::Unit {
        return Err(unit_regime());
    }
    let (lo, hi) = search_interval(params)?;
    let f = |c: f64| friction_gap(c, params);
    if f(lo)? >= 0.0 {
        return Err(Error::Convergence(format!(
            "f is not negative at the left edge c={lo}"
        )));
    }
    let root = find_root(
        f,
        lo,
        hi,
        RootOptions {
            ftol: ROOT_FTOL,
            max_iter: ROOT_MAX_ITER,
        },
    )?;
    let changes = count_sign_changes(f, lo, hi, SCAN_POINTS);
    if changes != 1 {
        return Err(Error::Convergence(format!(
            "expected one sign change of f on the bracket, found {changes}"
        )));
    }
    FrictionSolution::from_root(*params, root.x, root.fx)
}

/// Solve, falling back to the degenerate solution when `theta == 1`.
pub fn solve(params: &MarketParams) -> Result<FrictionSolution> {
    if params.regime() == Regime::Unit {
        Ok(FrictionSolution::degenerate(*params))
    } else {
        solve_c(params)
    }
}

/// Multiplicative lower bound `V >= margin * V_tilde` on liquidation wealth.
pub fn admissibility_margin(sol: &FrictionSolution) -> f64 {
    1.0 - sol.lambda() / (1.0 + sol.c / ((1.0 - sol.lambda()) * sol.s_bar))
}

/// Smallest `lambda` on an increasing grid at which the admissibility margin
/// is no longer positive (or the solver fails). `None` if every grid point
/// is admissible.
pub fn scan_admissibility_threshold(
    theta: f64,
    sigma: f64,
    lambdas: &[f64],
) -> Result<Option<f64>> {
    for &lambda in lambdas {
        let params = MarketParams::from_theta(theta, sigma, lambda)?;
        match solve(&params) {
            Ok(sol) if admissibility_margin(&sol) > 0.0 => continue,
            _ => return Ok(Some(lambda)),
        }
    }
    Ok(None)
}
