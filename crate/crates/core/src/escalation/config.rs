use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::BetaParams;

fn default_epsilon() -> f64 {
    0.05
}

fn default_gamma() -> f64 {
    0.75
}

fn default_exclusion() -> f64 {
    0.95
}

fn default_true() -> bool {
    true
}

fn default_cohort_size() -> u32 {
    3
}

fn default_max_subjects() -> u32 {
    30
}

/// Parameters of the hybrid escalation design.
///
/// The target interval is `(p_T - epsilon1, p_T + epsilon2)`; its upper end
/// is the overdosing threshold whose posterior tail mass is held below
/// `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscalationConfig {
    pub target_dlt_rate: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon1: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon2: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Overdose probability at which the current dose and everything above
    /// it is removed from the ladder.
    #[serde(default = "default_exclusion")]
    pub exclusion_threshold: f64,
    /// When false, Stage 1 is plain mTPI (the `gamma` constraint is off).
    #[serde(default = "default_true")]
    pub overdose_control: bool,
    #[serde(default)]
    pub prior: BetaParams,
    pub provisional_doses: Vec<f64>,
    #[serde(default = "default_cohort_size")]
    pub cohort_size: u32,
    #[serde(default = "default_max_subjects")]
    pub max_subjects: u32,
    #[serde(default)]
    pub min_subjects_for_mtd: u32,
}

impl EscalationConfig {
    /// Defaults for everything except the target rate and dose ladder.
    pub fn new(target_dlt_rate: f64, provisional_doses: Vec<f64>) -> Self {
        Self {
            target_dlt_rate,
            epsilon1: default_epsilon(),
            epsilon2: default_epsilon(),
            gamma: default_gamma(),
            exclusion_threshold: default_exclusion(),
            overdose_control: true,
            prior: BetaParams::uniform(),
            provisional_doses,
            cohort_size: default_cohort_size(),
            max_subjects: default_max_subjects(),
            min_subjects_for_mtd: 0,
        }
    }

    /// Lower end of the target interval.
    pub fn delta1(&self) -> f64 {
        self.target_dlt_rate - self.epsilon1
    }

    /// Upper end of the target interval; start of the overdosing interval.
    pub fn delta2(&self) -> f64 {
        self.target_dlt_rate + self.epsilon2
    }

    pub fn dose_count(&self) -> usize {
        self.provisional_doses.len()
    }

    /// Checks the cross-field invariants; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let p = self.target_dlt_rate;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::config("target_dlt_rate", "must lie in (0, 1)"));
        }
        if !(self.epsilon1 > 0.0) {
            return Err(Error::config("epsilon1", "must be positive"));
        }
        if !(self.epsilon2 > 0.0) {
            return Err(Error::config("epsilon2", "must be positive"));
        }
        if !(self.delta1() > 0.0) {
            return Err(Error::config(
                "epsilon1",
                "target_dlt_rate - epsilon1 must be > 0 (0 < delta1 < p_T)",
            ));
        }
        if !(self.delta2() < 1.0) {
            return Err(Error::config(
                "epsilon2",
                "target_dlt_rate + epsilon2 must be < 1 (p_T < delta2 < 1)",
            ));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("gamma", "must lie in (0, 1)"));
        }
        if !(self.exclusion_threshold > 0.0 && self.exclusion_threshold <= 1.0) {
            return Err(Error::config("exclusion_threshold", "must lie in (0, 1]"));
        }
        if let Err(e) = self.prior.validate() {
            return Err(Error::config("prior", e.to_string()));
        }
        if self.provisional_doses.is_empty() {
            return Err(Error::config("provisional_doses", "must contain at least one dose"));
        }
        for (i, &d) in self.provisional_doses.iter().enumerate() {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::config(format!("provisional_doses[{i}]"), "doses must be positive"));
            }
            if i > 0 && d <= self.provisional_doses[i - 1] {
                return Err(Error::config(
                    format!("provisional_doses[{i}]"),
                    "doses must be strictly increasing",
                ));
            }
        }
        if self.cohort_size == 0 {
            return Err(Error::config("cohort_size", "must be positive"));
        }
        if self.max_subjects == 0 {
            return Err(Error::config("max_subjects", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = EscalationConfig::new(0.3, vec![100.0, 200.0, 400.0]);
        c.validate().unwrap();
        assert!((c.delta1() - 0.25).abs() < 1e-15);
        assert!((c.delta2() - 0.35).abs() < 1e-15);
        assert_eq!(c.gamma, 0.75);
    }

    #[test]
    fn rejects_bad_intervals_and_ladders() {
        let mut c = EscalationConfig::new(0.3, vec![100.0, 200.0]);
        c.epsilon1 = 0.3;
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "epsilon1"));

        let c = EscalationConfig::new(0.3, vec![100.0, 100.0, 200.0]);
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "provisional_doses[1]"));
    }
}
