use std::fmt;

use serde::{Deserialize, Serialize};

use super::EscalationConfig;
use crate::error::{Error, Result};

/// Escalation decision. Ordered by conservatism: `DeEscalateAndExclude` <
/// `DeEscalate` < `Stay` < `Escalate`; `StopTrial` is terminal and outside
/// the order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Escalate,
    Stay,
    DeEscalate,
    DeEscalateAndExclude,
    StopTrial,
}

impl Decision {
    /// Position in the conservatism order (0 = most conservative).
    pub fn rank(self) -> Option<u8> {
        match self {
            Decision::DeEscalateAndExclude => Some(0),
            Decision::DeEscalate => Some(1),
            Decision::Stay => Some(2),
            Decision::Escalate => Some(3),
            Decision::StopTrial => None,
        }
    }

    /// The more conservative of two decisions.
    pub fn min_conservative(self, other: Decision) -> Decision {
        match (self.rank(), other.rank()) {
            (Some(a), Some(b)) => {
                if a <= b {
                    self
                } else {
                    other
                }
            }
            _ => Decision::StopTrial,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Decision::Escalate => "E",
            Decision::Stay => "S",
            Decision::DeEscalate => "D",
            Decision::DeEscalateAndExclude => "DU",
            Decision::StopTrial => "STOP",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Decision::Escalate => "escalate",
            Decision::Stay => "stay",
            Decision::DeEscalate => "de_escalate",
            Decision::DeEscalateAndExclude => "de_escalate_and_exclude",
            Decision::StopTrial => "stop_trial",
        };
        f.write_str(s)
    }
}

/// DLT tally at one provisional dose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoseOutcome {
    pub dose: f64,
    #[serde(default)]
    pub treated: u32,
    #[serde(default)]
    pub dlt_count: u32,
    #[serde(default)]
    pub excluded: bool,
}

impl DoseOutcome {
    pub fn new(dose: f64, treated: u32, dlt_count: u32) -> Self {
        Self {
            dose,
            treated,
            dlt_count,
            excluded: false,
        }
    }

    pub fn non_dlt(&self) -> u32 {
        self.treated - self.dlt_count
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrialHistoryDoc {
    outcomes: Vec<DoseOutcome>,
    #[serde(default)]
    current_dose_index: usize,
    #[serde(default)]
    total_treated: Option<u32>,
}

impl TryFrom<TrialHistoryDoc> for TrialHistory {
    type Error = String;

    fn try_from(doc: TrialHistoryDoc) -> std::result::Result<Self, String> {
        let sum: u32 = doc.outcomes.iter().map(|o| o.treated).sum();
        if let Some(declared) = doc.total_treated {
            if declared != sum {
                return Err(format!(
                    "total_treated ({declared}) must equal the sum of treated counts ({sum})"
                ));
            }
        }
        Ok(TrialHistory {
            outcomes: doc.outcomes,
            current_dose_index: doc.current_dose_index,
            total_treated: sum,
        })
    }
}

/// Accumulated per-dose outcomes aligned to the provisional dose list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrialHistoryDoc")]
pub struct TrialHistory {
    pub outcomes: Vec<DoseOutcome>,
    pub current_dose_index: usize,
    pub total_treated: u32,
}

impl TrialHistory {
    /// Empty history starting at the lowest dose.
    pub fn new(config: &EscalationConfig) -> Self {
        Self {
            outcomes: config
                .provisional_doses
                .iter()
                .map(|&d| DoseOutcome::new(d, 0, 0))
                .collect(),
            current_dose_index: 0,
            total_treated: 0,
        }
    }

    /// Builds a history from explicit outcomes, deriving `total_treated`.
    pub fn from_outcomes(outcomes: Vec<DoseOutcome>, current_dose_index: usize) -> Self {
        let total_treated = outcomes.iter().map(|o| o.treated).sum();
        Self {
            outcomes,
            current_dose_index,
            total_treated,
        }
    }

    pub fn current(&self) -> &DoseOutcome {
        &self.outcomes[self.current_dose_index]
    }

    /// Adds a cohort result at the current dose.
    pub fn record(&mut self, treated: u32, dlt_count: u32) -> Result<()> {
        if dlt_count > treated {
            return Err(Error::arg(format!("dlt_count {dlt_count} exceeds treated {treated}")));
        }
        let o = &mut self.outcomes[self.current_dose_index];
        o.treated += treated;
        o.dlt_count += dlt_count;
        self.total_treated += treated;
        Ok(())
    }

    pub fn is_excluded(&self, index: usize) -> bool {
        self.outcomes[index].excluded
    }

    /// Lowest non-excluded index strictly above `index`.
    pub fn next_open_above(&self, index: usize) -> Option<usize> {
        (index + 1..self.outcomes.len()).find(|&i| !self.outcomes[i].excluded)
    }

    /// Highest non-excluded index strictly below `index`.
    pub fn next_open_below(&self, index: usize) -> Option<usize> {
        (0..index).rev().find(|&i| !self.outcomes[i].excluded)
    }

    /// Marks `index` and every dose above it as excluded.
    pub fn exclude_from(&mut self, index: usize) {
        for o in &mut self.outcomes[index..] {
            o.excluded = true;
        }
    }

    /// Consistency with the design, reporting the first violated constraint.
    pub fn validate(&self, config: &EscalationConfig) -> Result<()> {
        if self.outcomes.len() != config.dose_count() {
            return Err(Error::config(
                "history.outcomes",
                format!(
                    "must have one entry per provisional dose ({} expected, {} given)",
                    config.dose_count(),
                    self.outcomes.len()
                ),
            ));
        }
        for (i, (o, &d)) in self.outcomes.iter().zip(&config.provisional_doses).enumerate() {
            if (o.dose - d).abs() > 1e-9 * d.max(1.0) {
                return Err(Error::config(
                    format!("history.outcomes[{i}].dose"),
                    format!("must match provisional dose {d}"),
                ));
            }
            if o.dlt_count > o.treated {
                return Err(Error::config(
                    format!("history.outcomes[{i}].dlt_count"),
                    "must not exceed treated",
                ));
            }
            if i > 0 && self.outcomes[i - 1].excluded && !o.excluded {
                return Err(Error::config(
                    format!("history.outcomes[{i}].excluded"),
                    "doses above an excluded dose must also be excluded",
                ));
            }
        }
        if self.current_dose_index >= self.outcomes.len() {
            return Err(Error::config(
                "history.current_dose_index",
                "must index a provisional dose",
            ));
        }
        let sum: u32 = self.outcomes.iter().map(|o| o.treated).sum();
        if sum != self.total_treated {
            return Err(Error::config(
                "history.total_treated",
                "must equal the sum of treated counts",
            ));
        }
        Ok(())
    }
}
