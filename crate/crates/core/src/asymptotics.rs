//! Expansions of the free-boundary constants, the no-trade region and the
//! optimal growth rate in powers of `t = lambda^{1/3}`.
//!
//! Two independent constructions of the expansions of `c` and `s_bar` are
//! provided:
//!
//! * [`Route::Inversion`] writes `s_bar` as a power series `F(c - c_bar)`,
//!   substitutes it into `lambda s_bar = s_bar - g(s_bar)`, whose right side
//!   starts at `(c - c_bar)^3`, takes the cube root and reverts the resulting
//!   series by Lagrange inversion.
//! * [`Route::Ansatz`] plugs undetermined coefficients for both `s_bar` and
//!   `c` into the smooth-pasting equations `g(s_bar) = (1 - lambda) s_bar` and
//!   `g'(s_bar) = 1 - lambda` and solves for them order by order.
//!
//! Coefficients are computed numerically for a given `theta`.

use crate::error::{domain, Error, Result};
use crate::model::Regime;
use crate::series::FracSeries;
use crate::solver::FrictionSolution;

pub const DEFAULT_ORDER: usize = 9;
pub const MAX_ORDER: usize = 12;

/// Construction used for the expansions of `c` and `s_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Inversion,
    Ansatz,
}

/// Expansions of `c` and `s_bar` in `lambda^{1/3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSeries {
    pub c: FracSeries,
    pub s_bar: FracSeries,
}

/// Lower boundary, upper boundary and width of a no-trade region.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySeries {
    pub lo: FracSeries,
    pub hi: FracSeries,
    pub width: FracSeries,
}

fn check(theta: f64, order: usize) -> Result<()> {
    if !theta.is_finite() || theta <= 0.0 {
        return domain(format!("theta must be positive and finite, got {theta}"));
    }
    if Regime::classify(theta) == Regime::Unit {
        return Err(Error::UnsupportedRegime(
            "theta = 1 has no expansion in lambda^(1/3)".into(),
        ));
    }
    if order == 0 || order > MAX_ORDER {
        return domain(format!("order must lie in 1..={MAX_ORDER}, got {order}"));
    }
    Ok(())
}

fn is_half(theta: f64) -> bool {
    Regime::classify(theta) == Regime::Half
}

pub fn c_bar(theta: f64) -> f64 {
    (1.0 - theta) / theta
}

/// Shadow transform evaluated at the boundary, `g(s_bar)`, and the ratio
/// `s_bar` itself, both as series in `z = c - c_bar` via the closed form of
/// `s_bar(c)`.
fn boundary_in_z(theta: f64, order: usize) -> Result<(FracSeries, FracSeries)> {
    let cb = c_bar(theta);
    let z = FracSeries::variable(order);
    let c = z.add_scalar(cb);
    if is_half(theta) {
        // s_bar = exp((c^2 - 1) / c), so ln s_bar is known exactly
        let log_s = c.mul(&c).add_scalar(-1.0).div(&c)?;
        let s = log_s.exp();
        let c1 = c.add_scalar(1.0);
        let g = c1.add(&c.mul(&log_s)).div(&c1.sub(&log_s))?;
        return Ok((s, g));
    }
    let a = z.scale(2.0 * theta).add_scalar(1.0);
    let b = z.scale(-(2.0 * theta - 1.0)).add_scalar(cb);
    let base = c.div(&a.mul(&b))?;
    let s = base.pow_real(1.0 / (2.0 * theta - 1.0))?;
    let s2t = s.pow_real(2.0 * theta)?;
    let num = a.mul(&s2t).sub(&c.mul(&s));
    let den = s.sub(&b.mul(&s2t));
    Ok((s.clone(), num.div(&den)?))
}

/// `c` and `s_bar` by Lagrange inversion of `lambda = (c - c_bar)^3 Q(c - c_bar)`.
fn constants_by_inversion(theta: f64, order: usize) -> Result<ConstantSeries> {
    let work = order + 2;
    let (s_of_z, g_of_z) = boundary_in_z(theta, work)?;
    // lambda s_bar = s_bar - g(s_bar) vanishes to third order in z
    let gap = s_of_z.sub(&g_of_z);
    let q = gap.shift_down(3)?.div(&s_of_z.truncate(work - 3))?;
    if !(q.coeff(0) > 0.0) {
        return Err(Error::Domain(format!(
            "leading cubic coefficient {} is not positive",
            q.coeff(0)
        )));
    }
    let cube_root = q.pow_real(1.0 / 3.0)?;
    let mut psi = vec![0.0];
    psi.extend_from_slice(cube_root.coeffs());
    let psi = FracSeries::new(psi, order);
    let z_of_t = psi.lagrange_invert()?;
    let c = z_of_t.add_scalar(c_bar(theta));
    let s_bar = s_of_z.truncate(order).compose(&z_of_t)?;
    Ok(ConstantSeries { c, s_bar })
}

/// Residuals `g(s_bar) - (1-lambda) s_bar` and `g'(s_bar) - (1-lambda)` as
/// series in `t` for trial coefficient vectors.
fn smooth_pasting_residuals(
    theta: f64,
    s_coeffs: &[f64],
    c_coeffs: &[f64],
    order: usize,
) -> Result<(FracSeries, FracSeries)> {
    let s = FracSeries::new(s_coeffs.to_vec(), order);
    let c = FracSeries::new(c_coeffs.to_vec(), order);
    let mut lam = vec![0.0; order + 1];
    if order >= 3 {
        lam[3] = 1.0;
    }
    let one_minus_lam = FracSeries::new(lam, order).scale(-1.0).add_scalar(1.0);
    let (g, g1) = if is_half(theta) {
        let log_s = s.ln()?;
        let c1 = c.add_scalar(1.0);
        let d = c1.sub(&log_s);
        let g = c1.add(&c.mul(&log_s)).div(&d)?;
        let g1 = c1.mul(&c1).div(&s.mul(&d.mul(&d)))?;
        (g, g1)
    } else {
        let u = s.pow_real(1.0 - 2.0 * theta)?;
        let a = c.scale(2.0 * theta).add_scalar(2.0 * theta - 1.0);
        let b = c.scale(-(2.0 * theta - 1.0)).add_scalar(2.0 - 2.0 * theta);
        let d = u.sub(&b);
        let g = a.sub(&c.mul(&u)).div(&d)?;
        let k = c.mul(&b).sub(&a).scale(1.0 - 2.0 * theta);
        let g1 = k.mul(&u).div(&s.mul(&d.mul(&d)))?;
        (g, g1)
    };
    let e1 = g.sub(&one_minus_lam.mul(&s));
    let e2 = g1.sub(&one_minus_lam);
    Ok((e1, e2))
}

/// `c` and `s_bar` by coefficient comparison in the smooth-pasting equations.
///
/// The first equation starts at order three and the second at order two, so
/// the order-`n` coefficients `(A_n, B_n)` are pinned by the coefficients of
/// `t^{n+2}` and `t^{n+1}`, in which they enter linearly for `n >= 2`.
fn constants_by_ansatz(theta: f64, order: usize) -> Result<ConstantSeries> {
    let work = order + 2;
    let mut s = vec![0.0; order + 1];
    let mut c = vec![0.0; order + 1];
    s[0] = 1.0;
    c[0] = c_bar(theta);

    // first order: the quadratic form fixes B_1 / A_1, the cubic form the scale
    let probe = |s: &[f64], c: &[f64]| smooth_pasting_residuals(theta, s, c, work);
    s[1] = 1.0;
    c[1] = 0.0;
    let (_, e2_0) = probe(&s, &c)?;
    c[1] = 1.0;
    let (_, e2_1) = probe(&s, &c)?;
    let slope = e2_1.coeff(2) - e2_0.coeff(2);
    if slope == 0.0 {
        return Err(Error::Domain("degenerate first-order system".into()));
    }
    let ratio = -e2_0.coeff(2) / slope;
    c[1] = ratio;
    let (e1, _) = probe(&s, &c)?;
    // e1[3] = cubic(1, ratio) + 1, and cubic(a, a ratio) = a^3 cubic(1, ratio) must equal -1
    let cubic = e1.coeff(3) - 1.0;
    let scale = (-1.0 / cubic).cbrt();
    s[1] = scale;
    c[1] = ratio * scale;

    for n in 2..=order {
        s[n] = 0.0;
        c[n] = 0.0;
        let (e1, e2) = probe(&s, &c)?;
        let r = [e2.coeff(n + 1), e1.coeff(n + 2)];
        s[n] = 1.0;
        let (e1a, e2a) = probe(&s, &c)?;
        s[n] = 0.0;
        c[n] = 1.0;
        let (e1b, e2b) = probe(&s, &c)?;
        c[n] = 0.0;
        let ja = [e2a.coeff(n + 1) - r[0], e1a.coeff(n + 2) - r[1]];
        let jb = [e2b.coeff(n + 1) - r[0], e1b.coeff(n + 2) - r[1]];
        let det = ja[0] * jb[1] - ja[1] * jb[0];
        if det == 0.0 {
            return Err(Error::Domain(format!("singular system at order {n}")));
        }
        s[n] = (-r[0] * jb[1] + r[1] * jb[0]) / det;
        c[n] = (-ja[0] * r[1] + ja[1] * r[0]) / det;
    }
    Ok(ConstantSeries {
        c: FracSeries::from_coeffs(c),
        s_bar: FracSeries::from_coeffs(s),
    })
}

pub fn expand_constants(theta: f64, order: usize, route: Route) -> Result<ConstantSeries> {
    check(theta, order)?;
    match route {
        Route::Inversion => constants_by_inversion(theta, order),
        Route::Ansatz => constants_by_ansatz(theta, order),
    }
}

pub fn expand_c(theta: f64, order: usize) -> Result<FracSeries> {
    Ok(expand_constants(theta, order, Route::Inversion)?.c)
}

pub fn expand_s_bar(theta: f64, order: usize) -> Result<FracSeries> {
    Ok(expand_constants(theta, order, Route::Inversion)?.s_bar)
}

/// No-trade region in terms of the ask price: `1/(1+c)` and `1/(1+c/s_bar)`.
pub fn expand_boundaries(theta: f64, order: usize) -> Result<BoundarySeries> {
    let k = expand_constants(theta, order, Route::Inversion)?;
    let lo = k.c.add_scalar(1.0).recip()?;
    let hi = k.c.div(&k.s_bar)?.add_scalar(1.0).recip()?;
    let width = hi.sub(&lo);
    Ok(BoundarySeries { lo, hi, width })
}

/// Optimal growth rate from its closed form with `c`, `s_bar` expanded.
pub fn expand_growth(theta: f64, sigma: f64, order: usize) -> Result<FracSeries> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return domain(format!("sigma must be positive, got {sigma}"));
    }
    let k = expand_constants(theta, order, Route::Inversion)?;
    let (c, s) = (&k.c, &k.s_bar);
    let c1 = c.add_scalar(1.0);
    let s2 = sigma * sigma;
    if is_half(theta) {
        let den = c1.sub(&s.ln()?).mul(&c1).scale(2.0);
        return den.recip().map(|r| r.scale(s2));
    }
    let s2t = s.pow_real(2.0 * theta)?;
    let coef = c1.scale(2.0 * theta).sub(c).add_scalar(-2.0);
    let den = c1.mul(&s.add(&coef.mul(&s2t))).scale(2.0);
    Ok(s.div(&den)?.scale((2.0 * theta - 1.0) * s2))
}

/// No-trade region relative to the mid-price, in powers of
/// `lambda_mid^{1/3}` where `lambda = 2 lambda_mid / (1 + lambda_mid)`.
pub fn expand_midprice(theta: f64, order: usize) -> Result<BoundarySeries> {
    let k = expand_constants(theta, order, Route::Inversion)?;
    // lambda^{1/3} = 2^{1/3} v (1 + v^3)^{-1/3} with v = lambda_mid^{1/3}
    let mut cube = vec![0.0; order + 1];
    if order >= 3 {
        cube[3] = 1.0;
    }
    let v3 = FracSeries::new(cube, order);
    let tau = FracSeries::variable(order)
        .mul(&v3.add_scalar(1.0).pow_real(-1.0 / 3.0)?)
        .scale(2f64.cbrt());
    let c = k.c.compose(&tau)?;
    let s = k.s_bar.compose(&tau)?;
    // 2c / (2 - lambda_mid)
    let scaled = c.scale(2.0).div(&v3.scale(-1.0).add_scalar(2.0))?;
    let lo = scaled.add_scalar(1.0).recip()?;
    let hi = scaled.div(&s)?.add_scalar(1.0).recip()?;
    let width = hi.sub(&lo);
    Ok(BoundarySeries { lo, hi, width })
}

/// Absolute error of the order-`k` truncation of the `c` expansion against
/// the solved value, for `k = 1..=order`. Growth of these errors with `k`
/// indicates that `lambda` lies outside the useful range of the expansion.
pub fn truncation_profile(sol: &FrictionSolution, order: usize) -> Result<Vec<f64>> {
    let series = expand_c(sol.theta(), order)?;
    let t = sol.lambda().cbrt();
    Ok((1..=order)
        .map(|k| (series.truncate(k).eval(t) - sol.c).abs())
        .collect())
}
