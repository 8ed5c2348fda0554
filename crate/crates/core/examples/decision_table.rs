//! Stage-1 decision table for up to twelve patients at a dose.

use dosefind::escalation::{decision_table, EscalationConfig};

fn main() -> dosefind::Result<()> {
    let n_max = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(12);
    let config = EscalationConfig::new(0.30, vec![1.0]);
    let table = decision_table(&config, n_max)?;

    print!("  n |");
    for x in 0..=n_max {
        print!(" {x:>4}");
    }
    println!();
    for (i, row) in table.rows.iter().enumerate() {
        print!("{:>3} |", i + 1);
        for d in row {
            print!(" {:>4}", d.label());
        }
        println!();
    }
    Ok(())
}
