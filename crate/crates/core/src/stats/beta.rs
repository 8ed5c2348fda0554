//! Beta posteriors and interval probabilities.
//!
//! The regularized incomplete beta function is evaluated with the modified
//! Lentz continued fraction, switching to `1 - I_{1-x}(b, a)` above the
//! mean-ish point `(a + 1) / (a + b + 2)` where the fraction converges fastest.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let params = Self { alpha, beta };
        params.validate()?;
        Ok(params)
    }

    /// Beta(1, 1).
    pub fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::arg(format!("beta alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::arg(format!("beta beta must be > 0, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// `P(p <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        incomplete_beta_pair(self.alpha, self.beta, x).0
    }
}

impl Default for BetaParams {
    fn default() -> Self {
        Self::uniform()
    }
}

/// Conjugate update of a Beta prior with binomial counts.
pub fn beta_posterior(prior: BetaParams, events: u32, non_events: u32) -> BetaParams {
    BetaParams {
        alpha: prior.alpha + f64::from(events),
        beta: prior.beta + f64::from(non_events),
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    incomplete_beta_pair(a, b, x).0
}

/// Returns `(I_x(a, b), 1 - I_x(a, b))`, each computed without cancellation
/// on its own side of the symmetry switch.
fn incomplete_beta_pair(a: f64, b: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        let upper = lentz_fraction(b, a, 1.0 - x);
        (1.0 - upper, upper)
    } else {
        let lower = lentz_fraction(a, b, x);
        (lower, 1.0 - lower)
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `I_x(a, b)` via the continued fraction; accurate for `x <= (a+1)/(a+b+2)`.
fn lentz_fraction(a: f64, b: f64, x: f64) -> f64 {
    let ln_prefix = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    let prefix = ln_prefix.exp() / a;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut f = d;

    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + even * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        f *= d * c;

        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + odd * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        f *= delta;

        if (delta - 1.0).abs() < EPS {
            break;
        }
    }

    (prefix * f).clamp(0.0, 1.0)
}

/// `P(lo < p <= hi)` under `Beta(params)`.
pub fn beta_interval_prob(params: BetaParams, lo: f64, hi: f64) -> Result<f64> {
    params.validate()?;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
        return Err(Error::arg(format!(
            "interval endpoints must lie in [0, 1], got ({lo}, {hi})"
        )));
    }
    if lo > hi {
        return Err(Error::arg(format!("interval lower end {lo} exceeds upper end {hi}")));
    }
    let (cdf_lo, sf_lo) = incomplete_beta_pair(params.alpha, params.beta, lo);
    let (cdf_hi, sf_hi) = incomplete_beta_pair(params.alpha, params.beta, hi);
    // Difference the smaller tail pair to keep relative accuracy in the tails.
    let p = if sf_lo < cdf_hi {
        sf_lo - sf_hi
    } else {
        cdf_hi - cdf_lo
    };
    Ok(p.clamp(0.0, 1.0))
}
