use serde::{Deserialize, Serialize};

use super::{Decision, EscalationConfig, TrialHistory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NextDose {
    Dose(usize),
    Complete,
}

/// Applies `decision` to the dose ladder, marking exclusions in `history` and
/// moving its current index.
pub fn next_dose(history: &mut TrialHistory, decision: Decision, config: &EscalationConfig) -> NextDose {
    let current = history.current_dose_index;
    let target = match decision {
        Decision::StopTrial => None,
        Decision::Escalate => Some(history.next_open_above(current).unwrap_or(current)),
        Decision::Stay => Some(current),
        Decision::DeEscalate => history.next_open_below(current),
        Decision::DeEscalateAndExclude => {
            history.exclude_from(current);
            history.next_open_below(current)
        }
    };
    match target {
        Some(i) => {
            history.current_dose_index = i;
            if history.total_treated >= config.max_subjects {
                NextDose::Complete
            } else {
                NextDose::Dose(i)
            }
        }
        None => NextDose::Complete,
    }
}
