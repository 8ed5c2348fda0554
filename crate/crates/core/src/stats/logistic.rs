//! Two-parameter logistic response curves and their weighted binomial fit.
//!
//! The fitter maximizes
//!
//! ```text
//! sum_i w_i * [ y_i * log p_i + (n_i - y_i) * log(1 - p_i) ],   p_i = expit(a + b * t(x_i))
//! ```
//!
//! by Newton-Raphson (equivalently IRLS for the canonical link) with step
//! halving. Iterations run on a centered and scaled covariate so that the
//! separation guard and the conditioning do not depend on dose units; the
//! reported curve, score and covariance are on the caller's scale.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Transform applied to the covariate before the linear predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovariateTransform {
    Identity,
    NaturalLog,
}

impl CovariateTransform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            CovariateTransform::Identity => x,
            CovariateTransform::NaturalLog => x.ln(),
        }
    }

    pub fn inverse(self, t: f64) -> f64 {
        match self {
            CovariateTransform::Identity => t,
            CovariateTransform::NaturalLog => t.exp(),
        }
    }
}

pub fn expit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticCurve {
    pub intercept: f64,
    pub slope: f64,
    pub transform: CovariateTransform,
}

impl LogisticCurve {
    pub fn new(intercept: f64, slope: f64, transform: CovariateTransform) -> Self {
        Self {
            intercept,
            slope,
            transform,
        }
    }

    pub fn linear_predictor(&self, x: f64) -> f64 {
        self.intercept + self.slope * self.transform.apply(x)
    }

    pub fn response(&self, x: f64) -> f64 {
        expit(self.linear_predictor(x))
    }

    /// Covariate value at which the curve reaches `target`.
    pub fn invert(&self, target: f64) -> Result<f64> {
        logistic_invert(self, target)
    }
}

/// One binomial cell; `weight` is the power applied to its likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialObservation {
    pub covariate: f64,
    pub responders: u32,
    pub total: u32,
    pub weight: f64,
}

impl BinomialObservation {
    pub fn new(covariate: f64, responders: u32, total: u32) -> Self {
        Self {
            covariate,
            responders,
            total,
            weight: 1.0,
        }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub curve: LogisticCurve,
    /// Covariance of `(intercept, slope)`.
    pub covariance: [[f64; 2]; 2],
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    /// Variance of the linear predictor at `x` (delta method).
    pub fn predictor_variance(&self, x: f64) -> f64 {
        let t = self.curve.transform.apply(x);
        let s = &self.covariance;
        s[0][0] + 2.0 * t * s[0][1] + t * t * s[1][1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence when the score max-norm falls below this.
    pub score_tolerance: f64,
    /// `|a| + |b|` bound on the standardized covariate scale; exceeding it
    /// is treated as separation.
    pub separation_bound: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            score_tolerance: 1e-8,
            separation_bound: 50.0,
        }
    }
}

pub fn fit_logistic_weighted(
    data: &[BinomialObservation],
    transform: CovariateTransform,
) -> Result<FitResult> {
    fit_logistic_weighted_with(data, transform, &FitOptions::default())
}

struct Cell {
    t: f64,
    y: f64,
    n: f64,
    w: f64,
}

struct Evaluation {
    log_likelihood: f64,
    /// Score on the caller's `(a, b)` scale.
    score: [f64; 2],
    /// Observed information on the caller's `(a, b)` scale.
    information: [[f64; 2]; 2],
}

fn evaluate(cells: &[Cell], a: f64, b: f64) -> Evaluation {
    let mut ll = 0.0;
    let mut score = [0.0; 2];
    let mut info = [[0.0; 2]; 2];
    for c in cells {
        let eta = a + b * c.t;
        let p = expit(eta);
        ll += c.w * (-c.y * softplus(-eta) - (c.n - c.y) * softplus(eta));
        let r = c.w * (c.y - c.n * p);
        score[0] += r;
        score[1] += r * c.t;
        let v = c.w * c.n * p * (1.0 - p);
        info[0][0] += v;
        info[0][1] += v * c.t;
        info[1][1] += v * c.t * c.t;
    }
    info[1][0] = info[0][1];
    Evaluation {
        log_likelihood: ll,
        score,
        information: info,
    }
}

/// Score and information in standardized coordinates: `J^T g` and `J^T I J`.
fn standardized(eval: &Evaluation, j: &[[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let g = [
        j[0][0] * eval.score[0] + j[1][0] * eval.score[1],
        j[0][1] * eval.score[0] + j[1][1] * eval.score[1],
    ];
    let i = &eval.information;
    let ij = [
        [i[0][0] * j[0][0] + i[0][1] * j[1][0], i[0][0] * j[0][1] + i[0][1] * j[1][1]],
        [i[1][0] * j[0][0] + i[1][1] * j[1][0], i[1][0] * j[0][1] + i[1][1] * j[1][1]],
    ];
    let h = [
        [j[0][0] * ij[0][0] + j[1][0] * ij[1][0], j[0][0] * ij[0][1] + j[1][0] * ij[1][1]],
        [j[0][1] * ij[0][0] + j[1][1] * ij[1][0], j[0][1] * ij[0][1] + j[1][1] * ij[1][1]],
    ];
    (g, h)
}

fn invert_2x2(m: &[[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0].abs().max(m[1][1].abs()).max(f64::MIN_POSITIVE);
    if !det.is_finite() || det.abs() <= 1e-14 * scale * scale {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

/// A finite maximum exists only when responders and non-responders overlap
/// on the covariate axis in both directions; otherwise the data are
/// (quasi-)separated and the likelihood keeps rising toward a step function.
fn responses_overlap(cells: &[Cell]) -> bool {
    let resp = cells.iter().filter(|c| c.y > 0.0).map(|c| c.t);
    let non = cells.iter().filter(|c| c.y < c.n).map(|c| c.t);
    let (resp_lo, resp_hi) = resp.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), t| (l.min(t), h.max(t)));
    let (non_lo, non_hi) = non.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), t| (l.min(t), h.max(t)));
    non_hi > resp_lo && resp_hi > non_lo
}

pub fn fit_logistic_weighted_with(
    data: &[BinomialObservation],
    transform: CovariateTransform,
    options: &FitOptions,
) -> Result<FitResult> {
    let mut cells = Vec::with_capacity(data.len());
    for obs in data {
        if obs.responders > obs.total {
            return Err(Error::arg(format!(
                "responders {} exceed total {}",
                obs.responders, obs.total
            )));
        }
        if obs.total == 0 {
            return Err(Error::arg("observation with zero total"));
        }
        if !(0.0..=1.0).contains(&obs.weight) {
            return Err(Error::arg(format!("weight {} outside [0, 1]", obs.weight)));
        }
        if !(obs.covariate.is_finite() && obs.covariate > 0.0) {
            return Err(Error::arg(format!("covariate must be positive, got {}", obs.covariate)));
        }
        if obs.weight > 0.0 {
            cells.push(Cell {
                t: transform.apply(obs.covariate),
                y: f64::from(obs.responders),
                n: f64::from(obs.total),
                w: obs.weight,
            });
        }
    }

    let t_min = cells.iter().map(|c| c.t).fold(f64::INFINITY, f64::min);
    let t_max = cells.iter().map(|c| c.t).fold(f64::NEG_INFINITY, f64::max);
    if cells.is_empty() || t_max <= t_min {
        return Err(Error::DegenerateDesign(
            "need at least two distinct covariate values with positive weight".into(),
        ));
    }

    // Standardized coordinates: eta = alpha + beta * z, z = (t - center) / half_range.
    let total_w: f64 = cells.iter().map(|c| c.w * c.n).sum();
    let center = cells.iter().map(|c| c.w * c.n * c.t).sum::<f64>() / total_w;
    let half_range = 0.5 * (t_max - t_min);
    let to_caller = |alpha: f64, beta: f64| (alpha - beta * center / half_range, beta / half_range);
    // d(a, b) / d(alpha, beta)
    let jacobian = [[1.0, -center / half_range], [0.0, 1.0 / half_range]];

    let pooled = cells.iter().map(|c| c.w * c.y).sum::<f64>() / total_w;
    let mut alpha = logit(pooled.clamp(1e-6, 1.0 - 1e-6));
    let mut beta = 0.0;

    let mut converged = false;
    let mut iterations = 0;
    let (mut a, mut b) = to_caller(alpha, beta);
    let mut eval = evaluate(&cells, a, b);

    while iterations < options.max_iterations {
        let norm = eval.score[0].abs().max(eval.score[1].abs());
        if norm < options.score_tolerance {
            converged = true;
            break;
        }
        if alpha.abs() + beta.abs() > options.separation_bound {
            break;
        }
        iterations += 1;

        let (g, h) = standardized(&eval, &jacobian);
        let Some(h_inv) = invert_2x2(&h) else {
            break;
        };
        let step = [
            h_inv[0][0] * g[0] + h_inv[0][1] * g[1],
            h_inv[1][0] * g[0] + h_inv[1][1] * g[1],
        ];

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand_alpha = alpha + scale * step[0];
            let cand_beta = beta + scale * step[1];
            let (ca, cb) = to_caller(cand_alpha, cand_beta);
            let cand = evaluate(&cells, ca, cb);
            if cand.log_likelihood >= eval.log_likelihood - 1e-12 * eval.log_likelihood.abs() {
                alpha = cand_alpha;
                beta = cand_beta;
                a = ca;
                b = cb;
                eval = cand;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    if !converged {
        let norm = eval.score[0].abs().max(eval.score[1].abs());
        converged = norm < options.score_tolerance && alpha.abs() + beta.abs() <= options.separation_bound;
    }

    let (_, h) = standardized(&eval, &jacobian);
    let covariance = invert_2x2(&h)
        .map(|c| {
            // cov(a, b) = J cov(alpha, beta) J^T
            let j = &jacobian;
            let jc = [
                [j[0][0] * c[0][0] + j[0][1] * c[1][0], j[0][0] * c[0][1] + j[0][1] * c[1][1]],
                [j[1][0] * c[0][0] + j[1][1] * c[1][0], j[1][0] * c[0][1] + j[1][1] * c[1][1]],
            ];
            let s00 = jc[0][0] * j[0][0] + jc[0][1] * j[0][1];
            let s01 = jc[0][0] * j[1][0] + jc[0][1] * j[1][1];
            let s10 = jc[1][0] * j[0][0] + jc[1][1] * j[0][1];
            let s11 = jc[1][0] * j[1][0] + jc[1][1] * j[1][1];
            let off = 0.5 * (s01 + s10);
            [[s00, off], [off, s11]]
        })
        .unwrap_or([[f64::INFINITY, 0.0], [0.0, f64::INFINITY]]);
    if covariance[0][0] < 0.0 || covariance[1][1] < 0.0 || !responses_overlap(&cells) {
        converged = false;
    }

    Ok(FitResult {
        curve: LogisticCurve::new(a, b, transform),
        covariance,
        log_likelihood: eval.log_likelihood,
        converged,
        iterations,
    })
}

/// Covariate value where `curve` equals `target`.
pub fn logistic_invert(curve: &LogisticCurve, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::arg(format!("target {target} must lie in (0, 1)")));
    }
    if curve.slope == 0.0 {
        return Err(Error::NotInvertible);
    }
    let t = (logit(target) - curve.intercept) / curve.slope;
    Ok(curve.transform.inverse(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseInterval {
    pub lower: f64,
    pub point: f64,
    pub upper: f64,
}

/// Two-sided standard normal quantile for a central `level` interval.
pub fn normal_quantile_two_sided(level: f64) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(0.5 * (1.0 + level))
}

/// Wald interval for the fitted response at `x`, built on the linear
/// predictor and mapped through the inverse logit.
pub fn fitted_response_ci(fit: &FitResult, x: f64, level: f64) -> Result<ResponseInterval> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::arg(format!("confidence level {level} must lie in (0, 1)")));
    }
    let eta = fit.curve.linear_predictor(x);
    let sd = fit.predictor_variance(x).max(0.0).sqrt();
    let z = normal_quantile_two_sided(level);
    Ok(ResponseInterval {
        lower: expit(eta - z * sd),
        point: expit(eta),
        upper: expit(eta + z * sd),
    })
}
