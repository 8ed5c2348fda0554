//! Monte Carlo operating characteristics of a factorial design.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    compute_power_weights, fit_power_likelihood, identify_sensitive_cohort, select_optimal_dose,
    simulate_cohort_data, FactorialDesign, TrueCurveSet,
};
use crate::error::{Error, Result};
use crate::stats::{mean, median, sample_sd};

/// Per-replicate outcome, one entry per CI level in `doses` and `relative_rr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: u64,
    pub sensitive_index: usize,
    /// The fit could not be used and every level took the high dose.
    pub fallback: bool,
    pub doses: Vec<f64>,
    pub relative_rr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub ci_level: f64,
    pub dose_mean: f64,
    pub dose_median: f64,
    pub dose_sd: f64,
    pub rr_mean: f64,
    pub rr_median: f64,
    pub rr_sd: f64,
    pub pct_rr_below_70: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingCharacteristics {
    pub p_select: f64,
    pub levels: Vec<LevelSummary>,
    pub fallback_rate: f64,
    pub replicates: usize,
    pub seed: u64,
}

fn check(design: &FactorialDesign, truth: &TrueCurveSet, ci_levels: &[f64]) -> Result<()> {
    design.validate()?;
    truth.validate(design.cohort_count, design.high_dose)?;
    if ci_levels.is_empty() {
        return Err(Error::config("ci_levels", "must not be empty"));
    }
    if let Some(l) = ci_levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::config("ci_levels", format!("level {l} must lie in (0, 1)")));
    }
    Ok(())
}

/// Simulates and analyses replicate `r`.
pub fn run_replicate(
    design: &FactorialDesign,
    truth: &TrueCurveSet,
    seed: u64,
    r: u64,
    ci_levels: &[f64],
) -> Result<ReplicateResult> {
    let hd = design.high_dose;
    let data = simulate_cohort_data(design, truth, seed, r);
    let sensitive = identify_sensitive_cohort(&data, hd)?;
    let weights = compute_power_weights(&data, sensitive, hd)?;
    let floor = design.lowest_dose();

    let fit = match fit_power_likelihood(&data, &weights, hd) {
        Ok(f) if f.fit.converged && f.fit.curve.slope > 0.0 => Some(f),
        Ok(_) | Err(Error::DegenerateDesign(_)) => None,
        Err(e) => return Err(e),
    };
    let doses = match &fit {
        Some(f) => ci_levels
            .iter()
            .map(|&l| select_optimal_dose(f, hd, l, floor).map(|o| o.chosen_dose))
            .collect::<Result<Vec<_>>>()?,
        None => vec![hd; ci_levels.len()],
    };
    let f1_hd = truth.response(0, hd);
    let relative_rr = doses.iter().map(|&d| 100.0 * truth.response(0, d) / f1_hd).collect();
    Ok(ReplicateResult {
        replicate: r,
        sensitive_index: sensitive,
        fallback: fit.is_none(),
        doses,
        relative_rr,
    })
}

pub fn simulate_replicates(
    design: &FactorialDesign,
    truth: &TrueCurveSet,
    replicates: usize,
    seed: u64,
    ci_levels: &[f64],
) -> Result<Vec<ReplicateResult>> {
    check(design, truth, ci_levels)?;
    (0..replicates as u64)
        .map(|r| run_replicate(design, truth, seed, r, ci_levels))
        .collect()
}

/// Parallel form of [`simulate_replicates`] with identical output.
pub fn simulate_replicates_par(
    design: &FactorialDesign,
    truth: &TrueCurveSet,
    replicates: usize,
    seed: u64,
    ci_levels: &[f64],
) -> Result<Vec<ReplicateResult>> {
    check(design, truth, ci_levels)?;
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| run_replicate(design, truth, seed, r, ci_levels))
        .collect()
}

/// Table-2 style summary of stored replicate results.
pub fn summarize_replicates(results: &[ReplicateResult], ci_levels: &[f64], seed: u64) -> OperatingCharacteristics {
    let n = results.len() as f64;
    let levels = ci_levels
        .iter()
        .enumerate()
        .map(|(k, &ci_level)| {
            let doses: Vec<f64> = results.iter().map(|r| r.doses[k]).collect();
            let rr: Vec<f64> = results.iter().map(|r| r.relative_rr[k]).collect();
            let below = rr.iter().filter(|&&v| v < 70.0).count() as f64;
            LevelSummary {
                ci_level,
                dose_mean: mean(&doses),
                dose_median: median(&doses),
                dose_sd: sample_sd(&doses),
                rr_mean: mean(&rr),
                rr_median: median(&rr),
                rr_sd: sample_sd(&rr),
                pct_rr_below_70: 100.0 * below / n,
            }
        })
        .collect();
    OperatingCharacteristics {
        p_select: results.iter().filter(|r| r.sensitive_index == 0).count() as f64 / n,
        levels,
        fallback_rate: results.iter().filter(|r| r.fallback).count() as f64 / n,
        replicates: results.len(),
        seed,
    }
}

pub fn run_operating_characteristics(
    design: &FactorialDesign,
    truth: &TrueCurveSet,
    replicates: usize,
    seed: u64,
    ci_levels: &[f64],
) -> Result<OperatingCharacteristics> {
    let results = simulate_replicates(design, truth, replicates, seed, ci_levels)?;
    Ok(summarize_replicates(&results, ci_levels, seed))
}

pub fn run_operating_characteristics_par(
    design: &FactorialDesign,
    truth: &TrueCurveSet,
    replicates: usize,
    seed: u64,
    ci_levels: &[f64],
) -> Result<OperatingCharacteristics> {
    let results = simulate_replicates_par(design, truth, replicates, seed, ci_levels)?;
    Ok(summarize_replicates(&results, ci_levels, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResult {
    pub scheme: String,
    pub characteristics: OperatingCharacteristics,
}

/// Every scheme under one seed. Arms with the same dose and size draw from
/// the same stream, so schemes sharing their high-dose arms identify the
/// sensitive cohort identically.
pub fn compare_schemes(
    schemes: &[(String, FactorialDesign)],
    truth: &TrueCurveSet,
    replicates: usize,
    seed: u64,
    ci_levels: &[f64],
    parallel: bool,
) -> Result<Vec<SchemeResult>> {
    if schemes.is_empty() {
        return Err(Error::arg("no schemes to compare"));
    }
    schemes
        .iter()
        .map(|(name, design)| {
            let characteristics = if parallel {
                run_operating_characteristics_par(design, truth, replicates, seed, ci_levels)?
            } else {
                run_operating_characteristics(design, truth, replicates, seed, ci_levels)?
            };
            Ok(SchemeResult {
                scheme: name.clone(),
                characteristics,
            })
        })
        .collect()
}
