//! Truncated power series with real coefficients.
//!
//! A [`FracSeries`] of order `K` stores `a_0, ..., a_K` and represents
//! `sum a_k t^k`. Every operation truncates at the smaller order of its
//! operands. In the asymptotic expansions `t` stands for `lambda^{1/3}`, but
//! the engine itself is agnostic to what the variable means.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FracSeries {
    coeffs: Vec<f64>,
}

impl FracSeries {
    /// Series from coefficients, truncated or zero-padded to `order`.
    pub fn new(mut coeffs: Vec<f64>, order: usize) -> FracSeries {
        coeffs.resize(order + 1, 0.0);
        FracSeries { coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> FracSeries {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        FracSeries { coeffs }
    }

    pub fn constant(value: f64, order: usize) -> FracSeries {
        FracSeries::new(vec![value], order)
    }

    /// The series `t`.
    pub fn variable(order: usize) -> FracSeries {
        FracSeries::new(vec![0.0, 1.0], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `t^k`, zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn truncate(&self, order: usize) -> FracSeries {
        FracSeries::new(self.coeffs.clone(), order)
    }

    /// Evaluate the truncated polynomial at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * t + a)
    }

    pub fn scale(&self, factor: f64) -> FracSeries {
        FracSeries {
            coeffs: self.coeffs.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn add_scalar(&self, value: f64) -> FracSeries {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    pub fn add(&self, other: &FracSeries) -> FracSeries {
        let n = self.order().min(other.order());
        FracSeries {
            coeffs: (0..=n).map(|k| self.coeffs[k] + other.coeffs[k]).collect(),
        }
    }

    pub fn sub(&self, other: &FracSeries) -> FracSeries {
        let n = self.order().min(other.order());
        FracSeries {
            coeffs: (0..=n).map(|k| self.coeffs[k] - other.coeffs[k]).collect(),
        }
    }

    pub fn mul(&self, other: &FracSeries) -> FracSeries {
        let n = self.order().min(other.order());
        let coeffs = (0..=n)
            .map(|k| (0..=k).map(|j| self.coeffs[j] * other.coeffs[k - j]).sum())
            .collect();
        FracSeries { coeffs }
    }

    /// Multiplicative inverse; needs a nonzero constant term.
    pub fn recip(&self) -> Result<FracSeries> {
        let a0 = self.coeffs[0];
        if a0 == 0.0 || !a0.is_finite() {
            return domain("reciprocal of a series with zero constant term");
        }
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = 1.0 / a0;
        for k in 1..=n {
            let s: f64 = (1..=k).map(|j| self.coeffs[j] * b[k - j]).sum();
            b[k] = -s / a0;
        }
        Ok(FracSeries { coeffs: b })
    }

    pub fn div(&self, other: &FracSeries) -> Result<FracSeries> {
        Ok(self.mul(&other.recip()?))
    }

    /// Real power via the J.C.P. Miller recurrence
    /// `n a_0 b_n = sum_{k=1}^n ((alpha + 1) k - n) a_k b_{n-k}`.
    pub fn pow_real(&self, alpha: f64) -> Result<FracSeries> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) {
            return domain(format!("real power of a series with constant term {a0}"));
        }
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = a0.powf(alpha);
        for m in 1..=n {
            let s: f64 = (1..=m)
                .map(|k| ((alpha + 1.0) * k as f64 - m as f64) * self.coeffs[k] * b[m - k])
                .sum();
            b[m] = s / (m as f64 * a0);
        }
        Ok(FracSeries { coeffs: b })
    }

    pub fn pow_int(&self, k: u32) -> FracSeries {
        let mut out = FracSeries::constant(1.0, self.order());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        out
    }

    pub fn exp(&self) -> FracSeries {
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = self.coeffs[0].exp();
        for m in 1..=n {
            let s: f64 = (1..=m)
                .map(|k| k as f64 * self.coeffs[k] * b[m - k])
                .sum();
            b[m] = s / m as f64;
        }
        FracSeries { coeffs: b }
    }

    /// Natural logarithm; needs a positive constant term.
    pub fn ln(&self) -> Result<FracSeries> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) {
            return domain(format!("logarithm of a series with constant term {a0}"));
        }
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = a0.ln();
        for m in 1..=n {
            let s: f64 = (1..m)
                .map(|k| k as f64 * b[k] * self.coeffs[m - k])
                .sum();
            b[m] = (self.coeffs[m] - s / m as f64) / a0;
        }
        Ok(FracSeries { coeffs: b })
    }

    /// `self(inner(t))`; `inner` must have zero constant term.
    pub fn compose(&self, inner: &FracSeries) -> Result<FracSeries> {
        if inner.coeffs[0] != 0.0 {
            return domain(format!(
                "composition needs an inner series without constant term, got {}",
                inner.coeffs[0]
            ));
        }
        let n = self.order().min(inner.order());
        let inner = inner.truncate(n);
        let mut out = FracSeries::constant(self.coeffs[n], n);
        for k in (0..n).rev() {
            out = out.mul(&inner).add_scalar(self.coeffs[k]);
        }
        Ok(out)
    }

    /// Divide by `t^k`, discarding the first `k` coefficients. The order
    /// drops by `k`.
    pub fn shift_down(&self, k: usize) -> Result<FracSeries> {
        if k > self.order() {
            return domain(format!("cannot shift a series of order {} by {k}", self.order()));
        }
        Ok(FracSeries {
            coeffs: self.coeffs[k..].to_vec(),
        })
    }

    /// Compositional inverse of `phi`, which must have zero constant term
    /// and a nonzero linear term. Uses
    /// `[t^k] phi^{-1} = (1/k) [z^{k-1}] (z / phi(z))^k`.
    pub fn lagrange_invert(&self) -> Result<FracSeries> {
        if self.coeffs[0] != 0.0 {
            return domain("series to invert must have zero constant term");
        }
        if self.order() == 0 || self.coeffs[1] == 0.0 {
            return domain("series to invert must have a nonzero linear term");
        }
        let n = self.order();
        // z / phi(z) as a series of order n - 1
        let q = self.shift_down(1)?.recip()?;
        let mut out = vec![0.0; n + 1];
        let mut power = FracSeries::constant(1.0, n - 1);
        for k in 1..=n {
            power = power.mul(&q);
            out[k] = power.coeffs[k - 1] / k as f64;
        }
        Ok(FracSeries { coeffs: out })
    }
}

impl Add for &FracSeries {
    type Output = FracSeries;
    fn add(self, rhs: &FracSeries) -> FracSeries {
        FracSeries::add(self, rhs)
    }
}

impl Sub for &FracSeries {
    type Output = FracSeries;
    fn sub(self, rhs: &FracSeries) -> FracSeries {
        FracSeries::sub(self, rhs)
    }
}

impl Mul for &FracSeries {
    type Output = FracSeries;
    fn mul(self, rhs: &FracSeries) -> FracSeries {
        FracSeries::mul(self, rhs)
    }
}

impl Neg for &FracSeries {
    type Output = FracSeries;
    fn neg(self) -> FracSeries {
        self.scale(-1.0)
    }
}
