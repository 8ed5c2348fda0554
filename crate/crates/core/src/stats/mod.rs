//! Numerical building blocks shared by every step of the procedure.

mod beta;
mod isotonic;
mod logistic;

pub use beta::{beta_interval_prob, beta_posterior, regularized_incomplete_beta, BetaParams};
pub use isotonic::{pava_blocks, pava_isotonic, PooledBlock};
pub use logistic::{
    expit, fit_logistic_weighted, fit_logistic_weighted_with, fitted_response_ci, logistic_invert, logit,
    normal_quantile_two_sided, BinomialObservation, CovariateTransform, FitOptions, FitResult, LogisticCurve,
    ResponseInterval,
};

/// Arithmetic mean; NaN for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median with the midpoint convention for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 0 {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    }
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}
