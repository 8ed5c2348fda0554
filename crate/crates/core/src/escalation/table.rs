use serde::{Deserialize, Serialize};

use super::{stage1_decision, Decision, DoseOutcome, EscalationConfig};
use crate::error::Result;

/// Stage-1 lookup: `rows[n - 1][x]` is the call for `x` DLTs among `n` treated.
///
/// Stage 2 depends on the other doses' data, so it cannot be tabulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTable {
    pub n_max: u32,
    pub rows: Vec<Vec<Decision>>,
}

impl DecisionTable {
    pub fn get(&self, treated: u32, dlt_count: u32) -> Option<Decision> {
        let row = self.rows.get(treated.checked_sub(1)? as usize)?;
        row.get(dlt_count as usize).copied()
    }

    pub fn cell_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

pub fn decision_table(config: &EscalationConfig, n_max: u32) -> Result<DecisionTable> {
    config.validate()?;
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let row = (0..=n)
            .map(|x| stage1_decision(&DoseOutcome::new(1.0, n, x), config))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(DecisionTable { n_max, rows })
}
