//! One live escalation call: three stages at the current dose and where the
//! next cohort goes.

use dosefind::escalation::{decide, next_dose, DoseOutcome, EscalationConfig, TrialHistory};

fn main() -> dosefind::Result<()> {
    let config = EscalationConfig::new(0.30, vec![100.0, 200.0, 400.0, 800.0, 1600.0]);
    let mut history = TrialHistory::from_outcomes(
        vec![
            DoseOutcome::new(100.0, 3, 0),
            DoseOutcome::new(200.0, 3, 0),
            DoseOutcome::new(400.0, 6, 1),
            DoseOutcome::new(800.0, 0, 0),
            DoseOutcome::new(1600.0, 0, 0),
        ],
        2,
    );
    history.validate(&config)?;

    let d = decide(&history, &config)?;
    let m = d.stage1.masses;
    println!("current dose {} mg, {}/{} DLTs", history.current().dose, history.current().dlt_count, history.current().treated);
    println!("UPM under {:.3}  target {:.3}  over {:.3}", m.upm_under, m.upm_target, m.upm_over);
    println!("P(overdose) {:.3}", m.p_over);
    println!("stage 1: {}", d.stage1.decision.label());
    match d.stage2.p_next {
        Some(p) => println!("stage 2: {} (p current {:.3}, p next {p:.3})", d.stage2.decision.label(), d.stage2.p_current),
        None => println!("stage 2: {} (p current {:.3})", d.stage2.decision.label(), d.stage2.p_current),
    }
    println!("stage 3: {}", d.combined.label());
    println!("next: {:?}", next_dose(&mut history, d.combined, &config));
    Ok(())
}
