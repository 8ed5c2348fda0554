//! Operating characteristics of the hybrid escalation design, with and
//! without the overdose constraint.

use dosefind::escalation::{simulate_many_par, EscalationConfig};

fn main() -> dosefind::Result<()> {
    let doses = vec![100.0, 200.0, 400.0, 800.0, 1600.0];
    let true_tox = [0.05, 0.15, 0.30, 0.45, 0.60];
    let mut config = EscalationConfig::new(0.30, doses.clone());

    for control in [true, false] {
        config.overdose_control = control;
        let s = simulate_many_par(&true_tox, &config, 2024, 1000)?;
        println!("overdose control: {control}");
        println!("  dose   true  select  mean n");
        for (i, d) in doses.iter().enumerate() {
            println!(
                "  {d:>6.1}  {:.2}  {:>5.3}  {:>6.2}",
                true_tox[i],
                s.selection_rate(i),
                s.mean_treated_per_dose[i]
            );
        }
        println!("  no MTD: {}", s.no_mtd);
        println!("  mean subjects {:.2}, fraction above target {:.4}", s.mean_subjects, s.mean_overdose_fraction);
    }
    Ok(())
}
