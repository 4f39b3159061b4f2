//! Closed-form shadow transform `g` mapping the ratio `S/m` to `S_tilde/m`.
//!
//! For `theta != 1/2` the transform is the rational function
//! `g(s) = (a s^{2θ} - c s) / (s - b s^{2θ})` with `a = 2θ-1+2cθ` and
//! `b = 2-2θ-c(2θ-1)`. It is evaluated with `s^{2θ}` divided out, i.e. in the
//! variable `u = s^{1-2θ}`, which keeps both numerator and denominator of order
//! one on the whole domain. For `theta == 1/2` the logarithmic branch
//! `g(s) = ((c+1) + c ln s) / (c+1 - ln s)` is used, and for `theta == 1` the
//! identity.

use crate::error::{domain, Result};
use crate::model::Regime;
use crate::solver::FrictionSolution;

/// Relative slack accepted on domain membership.
pub const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
enum Branch {
    Rational { a: f64, b: f64, k: f64 },
    Log,
    Identity,
}

/// Evaluator for `g`, `g'` and `g''` bound to one solved `(c, s_bar)`.
#[derive(Debug, Clone, Copy)]
pub struct ShadowTransform {
    sol: FrictionSolution,
    lo: f64,
    hi: f64,
    branch: Branch,
}

impl ShadowTransform {
    pub fn new(sol: FrictionSolution) -> ShadowTransform {
        let theta = sol.theta();
        let c = sol.c;
        let branch = match sol.params.regime() {
            Regime::Unit => Branch::Identity,
            Regime::Half => Branch::Log,
            _ => {
                let a = 2.0 * theta - 1.0 + 2.0 * c * theta;
                let b = 2.0 - 2.0 * theta - c * (2.0 * theta - 1.0);
                Branch::Rational {
                    a,
                    b,
                    k: (c * b - a) * (1.0 - 2.0 * theta),
                }
            }
        };
        let (lo, hi) = match branch {
            Branch::Identity => (0.0, f64::INFINITY),
            _ => sol.domain(),
        };
        ShadowTransform { sol, lo, hi, branch }
    }

    pub fn solution(&self) -> &FrictionSolution {
        &self.sol
    }

    /// Closed domain `(low, high)` of the transform.
    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Clamp `s` into the domain if it is within the relative slack.
    fn check(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s <= 0.0 {
            return domain(format!("ratio {s} is not a positive finite number"));
        }
        let lo = self.lo * (1.0 - DOMAIN_SLACK);
        let hi = self.hi * (1.0 + DOMAIN_SLACK);
        if s < lo || s > hi {
            return domain(format!(
                "ratio {s} outside the domain [{}, {}]",
                self.lo, self.hi
            ));
        }
        Ok(s.clamp(self.lo, self.hi))
    }

    fn u(&self, s: f64) -> f64 {
        let theta = self.sol.theta();
        ((1.0 - 2.0 * theta) * s.ln()).exp()
    }

    pub fn g(&self, s: f64) -> Result<f64> {
        let s = self.check(s)?;
        Ok(self.g_unchecked(s))
    }

    /// `g` without the domain check; used in the simulator's inner loop after
    /// the ratio has been clamped by construction.
    pub(crate) fn g_unchecked(&self, s: f64) -> f64 {
        let c = self.sol.c;
        match self.branch {
            Branch::Rational { a, b, .. } => {
                let u = self.u(s);
                (a - c * u) / (u - b)
            }
            Branch::Log => {
                let l = s.ln();
                ((c + 1.0) + c * l) / (c + 1.0 - l)
            }
            Branch::Identity => s,
        }
    }

    pub fn g_prime(&self, s: f64) -> Result<f64> {
        let s = self.check(s)?;
        let c = self.sol.c;
        Ok(match self.branch {
            Branch::Rational { b, k, .. } => {
                let u = self.u(s);
                let d = u - b;
                k * u / (s * d * d)
            }
            Branch::Log => {
                let d = c + 1.0 - s.ln();
                (c + 1.0) * (c + 1.0) / (s * d * d)
            }
            Branch::Identity => 1.0,
        })
    }

    pub fn g_second(&self, s: f64) -> Result<f64> {
        let s = self.check(s)?;
        let c = self.sol.c;
        let theta = self.sol.theta();
        Ok(match self.branch {
            Branch::Rational { b, k, .. } => {
                let u = self.u(s);
                let d = u - b;
                k * u * (2.0 * (theta - 1.0) * u + 2.0 * theta * b) / (s * s * d * d * d)
            }
            Branch::Log => {
                let d = c + 1.0 - s.ln();
                (c + 1.0) * (c + 1.0) * (2.0 - d) / (s * s * d * d * d)
            }
            Branch::Identity => 0.0,
        })
    }

    /// `g'' - (2 g'^2 / (c + g) - 2 theta g' / s)`, zero for the exact solution.
    pub fn ode_residual(&self, s: f64) -> Result<f64> {
        let g = self.g(s)?;
        let g1 = self.g_prime(s)?;
        let g2 = self.g_second(s)?;
        let rhs = 2.0 * g1 * g1 / (self.sol.c + g) - 2.0 * self.sol.theta() * g1 / s;
        Ok(g2 - rhs)
    }

    /// Shadow price `m g(S/m)`, which lies in `[(1-lambda) S, S]`.
    pub fn shadow_price(&self, price: f64, pivot: f64) -> Result<f64> {
        if !(price > 0.0 && pivot > 0.0) {
            return domain(format!("price {price} and pivot {pivot} must be positive"));
        }
        Ok(pivot * self.g(price / pivot)?)
    }

    /// Drift and volatility of `dS_tilde / S_tilde` at ratio `s`.
    pub fn drift_vol(&self, s: f64, sigma: f64) -> Result<(f64, f64)> {
        let g = self.g(s)?;
        let g1 = self.g_prime(s)?;
        let c = self.sol.c;
        let mu_t = sigma * sigma * g1 * g1 * s * s / (g * (c + g));
        let sigma_t = sigma * g1 * s / g;
        Ok((mu_t, sigma_t))
    }

    /// Optimal fraction of wealth in stock at ratio `s`, valued at the shadow
    /// price: `1 / (1 + c / g(s))`.
    pub fn shadow_fraction(&self, s: f64) -> Result<f64> {
        Ok(1.0 / (1.0 + self.sol.c / self.g(s)?))
    }
}
