//! Market parameters of the Black–Scholes model with a proportional bid-ask
//! spread `[(1 - lambda) S, S]`. The initial price is 1 and the interest rate 0.

use crate::error::{domain, Result};

/// Relative tolerance used to snap the Merton proportion onto the special
/// values 1/2 and 1.
pub const REGIME_RTOL: f64 = 1e-12;

/// Analytic regime of the Merton proportion `theta = mu / sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `theta` in (0, 1/2).
    LowTheta,
    /// `theta == 1/2`: logarithmic branch of the shadow transform.
    Half,
    /// `theta` in (1/2, 1).
    MidTheta,
    /// `theta == 1`: the frictionless optimum never trades.
    Unit,
    /// `theta > 1`: leveraged position, short in the bond.
    HighTheta,
}

impl Regime {
    pub fn classify(theta: f64) -> Regime {
        if (theta - 0.5).abs() <= REGIME_RTOL * 0.5 {
            Regime::Half
        } else if (theta - 1.0).abs() <= REGIME_RTOL {
            Regime::Unit
        } else if theta < 0.5 {
            Regime::LowTheta
        } else if theta < 1.0 {
            Regime::MidTheta
        } else {
            Regime::HighTheta
        }
    }

    /// True when the reflection domain of `S/m` lies below 1, i.e. `[s_bar, 1]`.
    pub fn is_leveraged(self) -> bool {
        self == Regime::HighTheta
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::LowTheta => "low",
            Regime::Half => "half",
            Regime::MidTheta => "mid",
            Regime::Unit => "unit",
            Regime::HighTheta => "high",
        }
    }
}

/// Validated drift, volatility and transaction cost.
///
/// `theta` is always recomputed from `mu` and `sigma`, so the two can never
/// disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    mu: f64,
    sigma: f64,
    lambda: f64,
}

impl MarketParams {
    pub fn new(mu: f64, sigma: f64, lambda: f64) -> Result<Self> {
        validate_params(mu, sigma, lambda)
    }

    /// Parameters with a prescribed Merton proportion, `mu = theta * sigma^2`.
    pub fn from_theta(theta: f64, sigma: f64, lambda: f64) -> Result<Self> {
        if !theta.is_finite() || theta <= 0.0 {
            return domain(format!("theta must be positive and finite, got {theta}"));
        }
        validate_params(theta * sigma * sigma, sigma, lambda)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta(&self) -> f64 {
        self.mu / (self.sigma * self.sigma)
    }

    pub fn regime(&self) -> Regime {
        Regime::classify(self.theta())
    }

    /// Frictionless growth rate `mu^2 / (2 sigma^2)`.
    pub fn frictionless_growth(&self) -> f64 {
        self.mu * self.mu / (2.0 * self.sigma * self.sigma)
    }

    /// Same market with a different transaction cost.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        validate_params(self.mu, self.sigma, lambda)
    }
}

pub fn validate_params(mu: f64, sigma: f64, lambda: f64) -> Result<MarketParams> {
    if !(mu.is_finite() && sigma.is_finite() && lambda.is_finite()) {
        return domain(format!(
            "parameters must be finite (mu={mu}, sigma={sigma}, lambda={lambda})"
        ));
    }
    if sigma <= 0.0 {
        return domain(format!("sigma must be positive, got {sigma}"));
    }
    if mu <= 0.0 {
        return domain(format!("mu must be positive, got {mu}"));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return domain(format!("lambda must lie in (0, 1), got {lambda}"));
    }
    Ok(MarketParams { mu, sigma, lambda })
}
