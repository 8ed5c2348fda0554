//! MTD at the end of escalation: posterior-mean rates smoothed by isotonic
//! regression, then the dose closest to target.

use dosefind::escalation::{select_mtd, DoseOutcome, EscalationConfig, TrialHistory};

fn main() {
    let config = EscalationConfig::new(0.30, vec![100.0, 200.0, 400.0, 800.0, 1600.0]);
    let mut history = TrialHistory::from_outcomes(
        vec![
            DoseOutcome::new(100.0, 3, 0),
            DoseOutcome::new(200.0, 6, 1),
            DoseOutcome::new(400.0, 9, 2),
            DoseOutcome::new(800.0, 6, 4),
            DoseOutcome::new(1600.0, 0, 0),
        ],
        3,
    );
    history.exclude_from(4);

    let sel = select_mtd(&history, &config);
    println!("  dose   n  x   raw  smoothed");
    for r in &sel.rows {
        let f = |v: Option<f64>| v.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
        println!("{:>6.0} {:>3} {:>2} {:>5} {:>9}", r.dose, r.treated, r.dlt_count, f(r.raw_rate), f(r.smoothed_rate));
    }
    match sel.dose {
        Some(d) => println!("MTD {d} mg"),
        None => println!("no dose qualifies"),
    }
}
