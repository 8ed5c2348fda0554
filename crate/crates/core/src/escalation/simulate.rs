//! Whole-trial simulation of the hybrid design under a known toxicity curve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{decide, next_dose, select_mtd, Decision, DoseOutcome, EscalationConfig, NextDose, TrialHistory};
use crate::error::{Error, Result};
use crate::rng::{binomial_count, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortStep {
    pub dose_index: usize,
    /// This cohort alone, not the running tally.
    pub cohort: DoseOutcome,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscalationTrial {
    pub path: Vec<CohortStep>,
    pub mtd_index: Option<usize>,
    pub mtd: Option<f64>,
    /// Subjects treated at doses whose true DLT rate exceeds the upper
    /// target bound.
    pub n_treated_above_true_mtd: u32,
    pub total_treated: u32,
    pub history: TrialHistory,
}

fn check_truth(true_tox: &[f64], config: &EscalationConfig) -> Result<()> {
    if true_tox.len() != config.dose_count() {
        return Err(Error::arg(format!(
            "true_tox has {} entries, expected {}",
            true_tox.len(),
            config.dose_count()
        )));
    }
    if let Some(p) = true_tox.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::arg(format!("true DLT rate {p} outside [0, 1]")));
    }
    config.validate()
}

pub fn simulate_escalation(true_tox: &[f64], config: &EscalationConfig, seed: u64) -> Result<EscalationTrial> {
    check_truth(true_tox, config)?;
    run_trial(true_tox, config, seed)
}

fn run_trial(true_tox: &[f64], config: &EscalationConfig, seed: u64) -> Result<EscalationTrial> {
    let mut history = TrialHistory::new(config);
    let mut path = Vec::new();
    let mut cohort_index = 0u64;
    while history.total_treated < config.max_subjects {
        let i = history.current_dose_index;
        let n = config.cohort_size.min(config.max_subjects - history.total_treated);
        let mut rng = stream(seed, &[cohort_index]);
        let x = binomial_count(&mut rng, n, true_tox[i]);
        history.record(n, x)?;
        let decision = decide(&history, config)?.combined;
        path.push(CohortStep {
            dose_index: i,
            cohort: DoseOutcome::new(history.outcomes[i].dose, n, x),
            decision,
        });
        cohort_index += 1;
        if next_dose(&mut history, decision, config) == NextDose::Complete {
            break;
        }
    }

    let mtd = select_mtd(&history, config);
    let d2 = config.delta2();
    let over = history
        .outcomes
        .iter()
        .zip(true_tox)
        .filter(|(_, &p)| p > d2)
        .map(|(o, _)| o.treated)
        .sum();
    Ok(EscalationTrial {
        path,
        mtd_index: mtd.dose_index,
        mtd: mtd.dose,
        n_treated_above_true_mtd: over,
        total_treated: history.total_treated,
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscalationSummary {
    pub trials: usize,
    /// Selection counts per provisional dose.
    pub mtd_counts: Vec<usize>,
    /// Trials that ended with every dose excluded.
    pub no_mtd: usize,
    pub mean_subjects: f64,
    /// Mean over trials of the fraction of subjects treated above the
    /// target interval.
    pub mean_overdose_fraction: f64,
    pub mean_treated_per_dose: Vec<f64>,
}

impl EscalationSummary {
    /// Most frequently selected dose index (lowest on ties).
    pub fn modal_mtd(&self) -> Option<usize> {
        let best = *self.mtd_counts.iter().max()?;
        (best > 0).then(|| self.mtd_counts.iter().position(|&c| c == best).unwrap())
    }

    pub fn selection_rate(&self, index: usize) -> f64 {
        self.mtd_counts[index] as f64 / self.trials as f64
    }
}

fn summarize(trials: &[EscalationTrial], doses: usize) -> EscalationSummary {
    let mut mtd_counts = vec![0; doses];
    let mut no_mtd = 0;
    let mut treated = vec![0.0; doses];
    let mut overdose = 0.0;
    let mut subjects = 0.0;
    for t in trials {
        match t.mtd_index {
            Some(i) => mtd_counts[i] += 1,
            None => no_mtd += 1,
        }
        for (acc, o) in treated.iter_mut().zip(&t.history.outcomes) {
            *acc += f64::from(o.treated);
        }
        subjects += f64::from(t.total_treated);
        if t.total_treated > 0 {
            overdose += f64::from(t.n_treated_above_true_mtd) / f64::from(t.total_treated);
        }
    }
    let n = trials.len() as f64;
    EscalationSummary {
        trials: trials.len(),
        mtd_counts,
        no_mtd,
        mean_subjects: subjects / n,
        mean_overdose_fraction: overdose / n,
        mean_treated_per_dose: treated.into_iter().map(|t| t / n).collect(),
    }
}

/// `trials` independent trials; trial `k` uses seed `seed ^ k`.
pub fn simulate_many(true_tox: &[f64], config: &EscalationConfig, seed: u64, trials: usize) -> Result<EscalationSummary> {
    check_truth(true_tox, config)?;
    let runs = (0..trials as u64)
        .map(|k| run_trial(true_tox, config, seed ^ k))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&runs, config.dose_count()))
}

/// Parallel form of [`simulate_many`]; the result is identical.
pub fn simulate_many_par(
    true_tox: &[f64],
    config: &EscalationConfig,
    seed: u64,
    trials: usize,
) -> Result<EscalationSummary> {
    check_truth(true_tox, config)?;
    let runs = (0..trials as u64)
        .into_par_iter()
        .map(|k| run_trial(true_tox, config, seed ^ k))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&runs, config.dose_count()))
}
