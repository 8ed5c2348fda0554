//! Step 1: hybrid dose escalation toward an MTD (or MAD when the ladder tops
//! out without toxicity).

mod config;
mod history;
mod ladder;
mod mtd;
mod simulate;
mod stages;
mod table;

pub use config::EscalationConfig;
pub use history::{Decision, DoseOutcome, TrialHistory};
pub use ladder::{next_dose, NextDose};
pub use mtd::{select_from_rates, select_mtd, MtdRow, MtdSelection};
pub use simulate::{simulate_escalation, simulate_many, simulate_many_par, CohortStep, EscalationSummary, EscalationTrial};
pub use stages::{
    decide, interval_masses, UPM_TIE_TOLERANCE, stage1_decision, stage1_evaluate, stage2_decision, stage2_evaluate, stage3_combine,
    HybridDecision, IntervalMasses, Stage1Outcome, Stage2Outcome,
};
pub use table::{decision_table, DecisionTable};
