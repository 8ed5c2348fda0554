//! The three stages of the hybrid escalation decision.
//!
//! Stage 1 is an interval design on the current dose alone: the posterior
//! Beta mass is split into under-dosing `(0, d1]`, target `(d1, d2]` and
//! over-dosing `(d2, 1]` intervals, each divided by its width (the unit
//! probability mass), and the largest wins. Escalation is blocked once the
//! over-dosing mass reaches `gamma`.
//!
//! Stage 2 pools every tested dose through a logistic model on log dose and
//! classifies the fitted rate at the current dose against the same interval.
//!
//! Stage 3 keeps the more conservative of the two.

use serde::{Deserialize, Serialize};

use super::{Decision, DoseOutcome, EscalationConfig, TrialHistory};
use crate::error::{Error, Result};
use crate::stats::{
    beta_interval_prob, beta_posterior, fit_logistic_weighted, BinomialObservation, CovariateTransform, LogisticCurve,
};

/// Posterior interval masses behind a Stage-1 call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalMasses {
    pub p_under: f64,
    pub p_target: f64,
    pub p_over: f64,
    pub upm_under: f64,
    pub upm_target: f64,
    pub upm_over: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage1Outcome {
    pub decision: Decision,
    pub masses: IntervalMasses,
    /// Whether the overdose constraint changed the unit-probability-mass call.
    pub overdose_constrained: bool,
}

/// Unit probability masses closer than this are treated as tied.
pub const UPM_TIE_TOLERANCE: f64 = 1e-9;

pub fn interval_masses(outcome: &DoseOutcome, config: &EscalationConfig) -> Result<IntervalMasses> {
    let d1 = config.delta1();
    let d2 = config.delta2();
    let post = beta_posterior(config.prior, outcome.dlt_count, outcome.non_dlt());
    let p_under = beta_interval_prob(post, 0.0, d1)?;
    let p_target = beta_interval_prob(post, d1, d2)?;
    let p_over = beta_interval_prob(post, d2, 1.0)?;
    Ok(IntervalMasses {
        p_under,
        p_target,
        p_over,
        upm_under: p_under / d1,
        upm_target: p_target / (d2 - d1),
        upm_over: p_over / (1.0 - d2),
    })
}

pub fn stage1_evaluate(outcome: &DoseOutcome, config: &EscalationConfig) -> Result<Stage1Outcome> {
    if outcome.treated == 0 {
        return Err(Error::InsufficientData("no subjects treated at the current dose".into()));
    }
    if outcome.dlt_count > outcome.treated {
        return Err(Error::arg("dlt_count exceeds treated"));
    }
    let m = interval_masses(outcome, config)?;

    // Ties, up to the accuracy of the interval masses, resolve toward the
    // more conservative call.
    let at_least = |a: f64, b: f64| a >= b - UPM_TIE_TOLERANCE;
    let base = if at_least(m.upm_over, m.upm_target) && at_least(m.upm_over, m.upm_under) {
        Decision::DeEscalate
    } else if at_least(m.upm_target, m.upm_under) {
        Decision::Stay
    } else {
        Decision::Escalate
    };

    let mut decision = base;
    let forced = config.overdose_control && m.p_over >= config.gamma;
    if forced {
        decision = decision.min_conservative(Decision::DeEscalate);
    }
    let exclude = m.p_over >= config.exclusion_threshold && (forced || !config.overdose_control);
    if exclude {
        decision = Decision::DeEscalateAndExclude;
    }
    Ok(Stage1Outcome {
        decision,
        masses: m,
        overdose_constrained: decision != base,
    })
}

pub fn stage1_decision(outcome: &DoseOutcome, config: &EscalationConfig) -> Result<Decision> {
    stage1_evaluate(outcome, config).map(|o| o.decision)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage2Outcome {
    pub decision: Decision,
    /// Estimated DLT rate at the current dose.
    pub p_current: f64,
    /// Predicted DLT rate at the next open provisional dose, if any.
    pub p_next: Option<f64>,
    /// The pooled model could not be fitted; the current dose's posterior
    /// mean was used instead.
    pub fallback: bool,
    /// Fitted curve on log dose, absent on fallback.
    pub curve: Option<LogisticCurve>,
}

pub fn stage2_evaluate(history: &TrialHistory, config: &EscalationConfig) -> Result<Stage2Outcome> {
    if history.total_treated == 0 {
        return Err(Error::InsufficientData("no subjects treated yet".into()));
    }
    let current = history.current_dose_index;
    let current_dose = history.outcomes[current].dose;
    let next_index = history.next_open_above(current);

    let observations: Vec<BinomialObservation> = history
        .outcomes
        .iter()
        .filter(|o| !o.excluded && o.treated > 0)
        .map(|o| BinomialObservation::new(o.dose, o.dlt_count, o.treated))
        .collect();

    let fitted = match fit_logistic_weighted(&observations, CovariateTransform::NaturalLog) {
        Ok(fit) if fit.converged => Some(fit.curve),
        Ok(_) | Err(Error::DegenerateDesign(_)) => None,
        Err(e) => return Err(e),
    };

    let (p_current, p_next, curve, fallback) = match fitted {
        Some(curve) if curve.slope >= 0.0 => {
            let p_next = next_index.map(|i| curve.response(history.outcomes[i].dose));
            (curve.response(current_dose), p_next, Some(curve), false)
        }
        Some(_) => {
            // Slope constrained at zero: the maximum likelihood is the pooled rate.
            let dlt: u32 = observations.iter().map(|o| o.responders).sum();
            let n: u32 = observations.iter().map(|o| o.total).sum();
            let pooled = f64::from(dlt) / f64::from(n);
            let flat = crate::stats::logit(pooled);
            let curve = LogisticCurve::new(flat, 0.0, CovariateTransform::NaturalLog);
            (pooled, next_index.map(|_| pooled), Some(curve), false)
        }
        None => {
            let o = &history.outcomes[current];
            let post = beta_posterior(config.prior, o.dlt_count, o.non_dlt());
            let p = post.mean();
            (p, next_index.map(|_| p), None, true)
        }
    };

    let mut decision = if p_current < config.delta1() {
        Decision::Escalate
    } else if p_current <= config.delta2() {
        Decision::Stay
    } else {
        Decision::DeEscalate
    };
    if decision == Decision::Escalate && p_next.is_some_and(|p| p > config.delta2()) {
        decision = Decision::Stay;
    }
    Ok(Stage2Outcome {
        decision,
        p_current,
        p_next,
        fallback,
        curve,
    })
}

pub fn stage2_decision(history: &TrialHistory, config: &EscalationConfig) -> Result<Decision> {
    stage2_evaluate(history, config).map(|o| o.decision)
}

/// Conservative pooling of the Stage-1 and Stage-2 calls.
pub fn stage3_combine(stage1: Decision, stage2: Decision) -> Decision {
    stage1.min_conservative(stage2)
}

/// All three stages evaluated on the current trial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridDecision {
    pub stage1: Stage1Outcome,
    pub stage2: Stage2Outcome,
    pub combined: Decision,
}

pub fn decide(history: &TrialHistory, config: &EscalationConfig) -> Result<HybridDecision> {
    let stage1 = stage1_evaluate(history.current(), config)?;
    let stage2 = stage2_evaluate(history, config)?;
    Ok(HybridDecision {
        stage1,
        stage2,
        combined: stage3_combine(stage1.decision, stage2.decision),
    })
}
