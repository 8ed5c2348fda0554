//! One replicate of the factorial analysis: identify the most sensitive
//! cohort at the high dose, discount the others by their response ratio, fit
//! a single power-likelihood curve, and read the optimal dose off the lower
//! confidence bound at the high dose.

use serde::{Deserialize, Serialize};

use super::{FactorialDesign, TrueCurveSet};
use crate::error::{Error, Result};
use crate::rng::{binomial_count, stream};
use crate::stats::{
    fit_logistic_weighted, fitted_response_ci, logistic_invert, BinomialObservation, CovariateTransform, FitResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmData {
    pub dose: f64,
    pub responders: u32,
    pub total: u32,
}

impl ArmData {
    pub fn rate(&self) -> f64 {
        f64::from(self.responders) / f64::from(self.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortData {
    /// Arms per cohort.
    pub cohorts: Vec<Vec<ArmData>>,
}

fn same_dose(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

impl CohortData {
    pub fn validate(&self) -> Result<()> {
        if self.cohorts.is_empty() {
            return Err(Error::arg("no cohorts"));
        }
        for (i, arms) in self.cohorts.iter().enumerate() {
            for a in arms {
                if !(a.dose.is_finite() && a.dose > 0.0) {
                    return Err(Error::arg(format!("cohort {i}: dose must be positive")));
                }
                if a.total == 0 || a.responders > a.total {
                    return Err(Error::arg(format!(
                        "cohort {i}: responders {} of total {} at dose {}",
                        a.responders, a.total, a.dose
                    )));
                }
            }
        }
        Ok(())
    }

    fn arm_at(&self, cohort: usize, dose: f64) -> Option<&ArmData> {
        self.cohorts[cohort].iter().find(|a| same_dose(a.dose, dose))
    }

    /// Observed response rate at `dose` for every cohort.
    pub fn rates_at(&self, dose: f64) -> Result<Vec<f64>> {
        (0..self.cohorts.len())
            .map(|c| {
                self.arm_at(c, dose)
                    .map(ArmData::rate)
                    .ok_or_else(|| Error::arg(format!("cohort {c} has no arm at dose {dose}")))
            })
            .collect()
    }
}

/// Binomial responses for every arm. Each arm's stream is keyed by
/// `(seed, replicate, cohort, dose)`, so arms with the same dose and size
/// see the same draws across designs.
pub fn simulate_cohort_data(design: &FactorialDesign, truth: &TrueCurveSet, seed: u64, replicate: u64) -> CohortData {
    let cohorts = (0..design.cohort_count)
        .map(|c| {
            design
                .arm_doses(c)
                .into_iter()
                .map(|dose| {
                    let mut rng = stream(seed, &[replicate, c as u64, dose.to_bits()]);
                    let p = truth.response(c, dose);
                    ArmData {
                        dose,
                        responders: binomial_count(&mut rng, design.n_per_arm, p),
                        total: design.n_per_arm,
                    }
                })
                .collect()
        })
        .collect();
    CohortData { cohorts }
}

/// Cohort with the highest observed response at the high dose; the lowest
/// index wins ties.
pub fn identify_sensitive_cohort(data: &CohortData, high_dose: f64) -> Result<usize> {
    let rates = data.rates_at(high_dose)?;
    let mut best = 0;
    for (i, &r) in rates.iter().enumerate() {
        if r > rates[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerWeights {
    pub alphas: Vec<f64>,
    pub sensitive_index: usize,
}

/// Likelihood exponents: each cohort's high-dose response rate relative to
/// the sensitive cohort, clamped to `[0, 1]`. With no response at all in the
/// sensitive cohort nothing is discounted.
pub fn compute_power_weights(data: &CohortData, sensitive_index: usize, high_dose: f64) -> Result<PowerWeights> {
    let rates = data.rates_at(high_dose)?;
    if sensitive_index >= rates.len() {
        return Err(Error::arg(format!("sensitive index {sensitive_index} out of range")));
    }
    let top = rates[sensitive_index];
    let alphas = rates
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            if j == sensitive_index || top <= 0.0 {
                1.0
            } else {
                (r / top).clamp(0.0, 1.0)
            }
        })
        .collect();
    Ok(PowerWeights {
        alphas,
        sensitive_index,
    })
}

/// A logistic fit on `dose / dose_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseResponseFit {
    pub fit: FitResult,
    pub dose_scale: f64,
}

impl DoseResponseFit {
    pub fn response(&self, dose: f64) -> f64 {
        self.fit.curve.response(dose / self.dose_scale)
    }
}

/// Maximizes `L_s * prod_j L_j^alpha_j` over a single logistic curve.
pub fn fit_power_likelihood(data: &CohortData, weights: &PowerWeights, dose_scale: f64) -> Result<DoseResponseFit> {
    data.validate()?;
    if weights.alphas.len() != data.cohorts.len() {
        return Err(Error::arg("one power weight per cohort is required"));
    }
    if !(dose_scale.is_finite() && dose_scale > 0.0) {
        return Err(Error::arg("dose scale must be positive"));
    }
    let observations: Vec<BinomialObservation> = data
        .cohorts
        .iter()
        .zip(&weights.alphas)
        .flat_map(|(arms, &alpha)| {
            arms.iter()
                .map(move |a| BinomialObservation::new(a.dose / dose_scale, a.responders, a.total).weighted(alpha))
        })
        .collect();
    let fit = fit_logistic_weighted(&observations, CovariateTransform::Identity)?;
    Ok(DoseResponseFit { fit, dose_scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalDoseResult {
    pub ci_level: f64,
    /// Lower confidence bound of the fitted response at the high dose.
    pub target_response: f64,
    pub chosen_dose: f64,
    /// `100 * f1(chosen) / f1(high dose)` against a known truth.
    pub relative_rr_pct: Option<f64>,
}

/// Dose at which the fitted curve reaches the lower confidence bound of its
/// own value at the high dose, clamped to `[floor_dose, high_dose]`.
pub fn select_optimal_dose(fit: &DoseResponseFit, high_dose: f64, ci_level: f64, floor_dose: f64) -> Result<OptimalDoseResult> {
    if !fit.fit.converged {
        return Err(Error::NotConverged);
    }
    if fit.fit.curve.slope <= 0.0 {
        return Err(Error::NotInvertible);
    }
    if !(floor_dose > 0.0 && floor_dose <= high_dose) {
        return Err(Error::arg("floor dose must lie in (0, high dose]"));
    }
    let ci = fitted_response_ci(&fit.fit, high_dose / fit.dose_scale, ci_level)?;
    let dose = logistic_invert(&fit.fit.curve, ci.lower)? * fit.dose_scale;
    Ok(OptimalDoseResult {
        ci_level,
        target_response: ci.lower,
        chosen_dose: dose.clamp(floor_dose, high_dose),
        relative_rr_pct: None,
    })
}
