//! Optimal growth rate and the stationary law of the reflected ratio `S/m`.
//!
//! The closed form of the growth rate is checked against an independent
//! route: the ergodic average of the local growth rate `mu_t^2 / (2 sigma_t^2)`
//! of the shadow price under the stationary density, computed by adaptive
//! quadrature.

use log::warn;

use crate::error::{domain, Error, Result};
use crate::model::Regime;
use crate::quadrature::{integrate, QuadOptions};
use crate::shadow::ShadowTransform;
use crate::solver::FrictionSolution;

/// Below this distance of `theta` from 1/2 the general closed form loses
/// digits to cancellation.
const HALF_CONDITIONING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthReport {
    pub delta_closed: f64,
    pub delta_quadrature: f64,
    /// `mu^2 / (2 sigma^2)`.
    pub delta_frictionless: f64,
    /// Constant prefactor of the stationary density.
    pub stationary_normalizer: f64,
    /// Quadrature of the stationary density over the domain; 1 up to
    /// round-off.
    pub stationary_mass: f64,
}

impl GrowthReport {
    pub fn compute(sol: &FrictionSolution) -> Result<GrowthReport> {
        let sigma = sol.params.sigma();
        let delta_closed = growth_rate_closed(sol, sigma)?;
        let delta_quadrature = growth_rate_quadrature(sol, sigma)?;
        let (stationary_normalizer, stationary_mass) = if sol.is_degenerate() {
            (f64::NAN, f64::NAN)
        } else {
            let (lo, hi) = sol.domain();
            let mass = integrate(
                |s| stationary_density_unchecked(s, sol),
                lo,
                hi,
                QuadOptions::default(),
            )?;
            (normalizer(sol), mass.value)
        };
        Ok(GrowthReport {
            delta_closed,
            delta_quadrature,
            delta_frictionless: sol.params.frictionless_growth(),
            stationary_normalizer,
            stationary_mass,
        })
    }
}

fn check_solution(sol: &FrictionSolution) -> Result<()> {
    if sol.is_degenerate() {
        return Ok(());
    }
    let ok = sol.c.is_finite() && sol.s_bar.is_finite() && sol.s_bar > 0.0 && sol.s_bar != 1.0;
    if !ok {
        return Err(Error::UnsupportedRegime(format!(
            "malformed solution c = {}, s_bar = {}",
            sol.c, sol.s_bar
        )));
    }
    Ok(())
}

/// `s_bar^{2 theta - 1} - 1`, accurate for `theta` near 1/2.
fn power_gap(sol: &FrictionSolution) -> f64 {
    ((2.0 * sol.theta() - 1.0) * sol.s_bar.ln()).exp_m1()
}

fn normalizer(sol: &FrictionSolution) -> f64 {
    let theta = sol.theta();
    match sol.params.regime() {
        Regime::Half => 1.0 / sol.s_bar.ln(),
        // for theta > 1 the domain is [s_bar, 1], reversing the orientation
        r if r.is_leveraged() => (2.0 * theta - 1.0) / -power_gap(sol),
        _ => (2.0 * theta - 1.0) / power_gap(sol),
    }
}

fn stationary_density_unchecked(s: f64, sol: &FrictionSolution) -> f64 {
    let theta = sol.theta();
    match sol.params.regime() {
        Regime::Half => normalizer(sol) / s,
        _ => normalizer(sol) * ((2.0 * theta - 2.0) * s.ln()).exp(),
    }
}

/// Density of the stationary law of `S/m` on its reflection domain.
pub fn stationary_density(s: f64, sol: &FrictionSolution) -> Result<f64> {
    check_solution(sol)?;
    if sol.is_degenerate() {
        return Err(Error::UnsupportedRegime(
            "theta = 1 has no reflection and no stationary law".into(),
        ));
    }
    let (lo, hi) = sol.domain();
    if !(s >= lo && s <= hi) {
        return domain(format!("ratio {s} outside the domain [{lo}, {hi}]"));
    }
    Ok(stationary_density_unchecked(s, sol))
}

/// Closed-form optimal growth rate.
pub fn growth_rate_closed(sol: &FrictionSolution, sigma: f64) -> Result<f64> {
    check_solution(sol)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return domain(format!("sigma must be positive, got {sigma}"));
    }
    let theta = sol.theta();
    let (c, s) = (sol.c, sol.s_bar);
    let s2 = sigma * sigma;
    match sol.params.regime() {
        Regime::Unit => Ok(s2 / 2.0),
        Regime::Half => Ok(s2 / (2.0 * (1.0 + c) * (1.0 + c - s.ln()))),
        _ => {
            if (2.0 * theta - 1.0).abs() < HALF_CONDITIONING {
                warn!(
                    "theta = {theta} is close to 1/2; the general growth formula is ill-conditioned, \
                     compare with the theta = 1/2 branch"
                );
            }
            let s2t = (2.0 * theta * s.ln()).exp();
            let den = 2.0 * (1.0 + c) * (s + (-2.0 - c + 2.0 * theta * (1.0 + c)) * s2t);
            Ok((2.0 * theta - 1.0) * s2 * s / den)
        }
    }
}

/// Growth rate as the stationary average of `mu_t^2 / (2 sigma_t^2)`, which
/// reduces to `sigma^2 g'(s)^2 s^2 / (2 (c + g(s))^2)`.
pub fn growth_rate_quadrature(sol: &FrictionSolution, sigma: f64) -> Result<f64> {
    check_solution(sol)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return domain(format!("sigma must be positive, got {sigma}"));
    }
    if sol.is_degenerate() {
        // g is the identity and c = 0: the integrand is the constant sigma^2/2
        return Ok(sigma * sigma / 2.0);
    }
    let shadow = ShadowTransform::new(*sol);
    let c = sol.c;
    let s2 = sigma * sigma;
    let integrand = |s: f64| {
        let g = shadow.g(s).unwrap_or(f64::NAN);
        let g1 = shadow.g_prime(s).unwrap_or(f64::NAN);
        let r = g1 * s / (c + g);
        0.5 * s2 * r * r * stationary_density_unchecked(s, sol)
    };
    let (lo, hi) = sol.domain();
    Ok(integrate(integrand, lo, hi, QuadOptions::default())?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarketParams;
    use crate::solver::{solve, solve_c};

    fn sol(theta: f64, sigma: f64, lambda: f64) -> FrictionSolution {
        solve(&MarketParams::from_theta(theta, sigma, lambda).unwrap()).unwrap()
    }

    #[test]
    fn density_integrates_to_one() {
        for (theta, lambda) in [(0.5, 0.01), (0.3, 0.01), (0.7, 0.05), (2.0, 0.005), (3.0, 0.001)] {
            let r = GrowthReport::compute(&sol(theta, 0.4, lambda)).unwrap();
            assert!((r.stationary_mass - 1.0).abs() < 1e-10, "theta={theta}: {}", r.stationary_mass);
            assert!(r.stationary_normalizer > 0.0);
        }
    }

    #[test]
    fn half_density_exact_antiderivative() {
        let s = sol(0.5, 0.4, 0.01);
        // integral of 1/(s log s_bar) is log(s)/log(s_bar)
        let mid = s.s_bar.sqrt();
        let exact = mid.ln() / s.s_bar.ln();
        let q = integrate(|x| stationary_density(x, &s).unwrap(), 1.0, mid, QuadOptions::default()).unwrap();
        assert!((q.value - exact).abs() < 1e-13);
        assert!((exact - 0.5).abs() < 1e-15);
    }

    #[test]
    fn leveraged_density_positive() {
        let s = sol(2.0, 0.4, 0.005);
        assert!(s.s_bar < 1.0);
        for k in 0..=10 {
            let x = s.s_bar + (1.0 - s.s_bar) * k as f64 / 10.0;
            assert!(stationary_density(x, &s).unwrap() > 0.0);
        }
        assert!(stationary_density(0.5 * s.s_bar, &s).is_err());
    }

    #[test]
    fn half_reference_value() {
        let s = sol(0.5, 0.4, 0.01);
        let d = growth_rate_closed(&s, 0.4).unwrap();
        // 30-digit evaluation of the closed form at the 30-digit root
        assert!((d - 0.019_524_858_162_1).abs() < 1e-12, "{d}");
        let q = growth_rate_quadrature(&s, 0.4).unwrap();
        assert!((d - q).abs() / 0.02 < 1e-8);
    }

    #[test]
    fn closed_matches_quadrature() {
        for theta in [0.1, 0.3, 0.5, 0.7, 0.9, 1.5, 2.0, 3.0] {
            for lambda in [0.001, 0.01, 0.05, 0.1] {
                let s = sol(theta, 0.5, lambda);
                let r = GrowthReport::compute(&s).unwrap();
                let rel = (r.delta_closed - r.delta_quadrature).abs() / r.delta_frictionless;
                assert!(rel < 1e-8, "theta={theta} lambda={lambda}: {rel}");
                assert!(r.delta_closed <= r.delta_frictionless);
                assert!(r.delta_closed > 0.0);
            }
        }
    }

    #[test]
    fn unit_theta() {
        let s = sol(1.0, 0.4, 0.01);
        assert_eq!(growth_rate_closed(&s, 0.4).unwrap(), 0.4 * 0.4 / 2.0);
        assert_eq!(growth_rate_quadrature(&s, 0.4).unwrap(), 0.4 * 0.4 / 2.0);
        assert!(matches!(stationary_density(1.0, &s), Err(Error::UnsupportedRegime(_))));
    }

    #[test]
    fn monotone_in_lambda() {
        for theta in [0.3, 0.5, 0.8, 2.0] {
            let mut prev = f64::INFINITY;
            for lambda in [1e-5, 1e-4, 1e-3, 1e-2, 5e-2, 0.1] {
                let d = growth_rate_closed(&sol(theta, 0.4, lambda), 0.4).unwrap();
                assert!(d <= prev, "theta={theta} lambda={lambda}");
                prev = d;
            }
        }
    }

    #[test]
    fn frictionless_limit() {
        let d = growth_rate_closed(&sol(0.5, 0.4, 1e-9), 0.4).unwrap();
        assert!((d - 0.02).abs() < 1e-6);
    }

    #[test]
    fn leading_correction() {
        // delta - [theta^2 sigma^2/2 - (3 sigma^3 theta^2 (1-theta)^2 / sqrt(128))^{2/3} lambda^{2/3}]
        // should shrink like lambda^{4/3}
        let (theta, sigma) = (0.3f64, 0.4f64);
        let lead = (3.0 * sigma.powi(3) * theta * theta * (1.0 - theta).powi(2) / 128f64.sqrt()).powf(2.0 / 3.0);
        let err = |lambda: f64| {
            let p = MarketParams::from_theta(theta, sigma, lambda).unwrap();
            let d = growth_rate_closed(&solve_c(&p).unwrap(), sigma).unwrap();
            (d - (p.frictionless_growth() - lead * lambda.powf(2.0 / 3.0))).abs()
        };
        let slope = (err(1e-3) / err(1e-5)).ln() / 100f64.ln();
        assert!((slope - 4.0 / 3.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn malformed_solution_rejected() {
        let mut s = sol(0.5, 0.4, 0.01);
        s.s_bar = f64::NAN;
        assert!(matches!(growth_rate_closed(&s, 0.4), Err(Error::UnsupportedRegime(_))));
    }
}
