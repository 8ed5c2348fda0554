//! Operating characteristics of the four fractional schemes and the full
//! factorial comparator under the default truth set.
//!
//! cargo run --release --example scheme_comparison -- [replicates] [seed]

use std::time::Instant;

use dosefind::factorial::{all_schemes, compare_schemes, TrueCurveSet};

fn main() -> dosefind::Result<()> {
    let mut args = std::env::args().skip(1);
    let replicates = args.next().and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(20_240_601);
    let levels = [0.80, 0.90, 0.95];

    let start = Instant::now();
    let rows = compare_schemes(&all_schemes(), &TrueCurveSet::default_set(), replicates, seed, &levels, true)?;
    println!("scheme  P(select)  CI   dose mean  median     SD   RR mean  median    SD  %RR<70");
    for row in &rows {
        let oc = &row.characteristics;
        for (k, l) in oc.levels.iter().enumerate() {
            let p = if k == 0 { format!("{:.2}", oc.p_select) } else { String::new() };
            println!(
                "{:<7} {:>9}  {:>2.0}%  {:>9.1} {:>7.1} {:>6.1}  {:>8.1} {:>7.1} {:>5.1} {:>7.1}",
                if k == 0 { row.scheme.as_str() } else { "" },
                p,
                100.0 * l.ci_level,
                l.dose_mean,
                l.dose_median,
                l.dose_sd,
                l.rr_mean,
                l.rr_median,
                l.rr_sd,
                l.pct_rr_below_70
            );
        }
    }
    let fallbacks: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.characteristics.fallback_rate)).collect();
    println!("fallback rates: {}", fallbacks.join(" "));
    println!("{replicates} replicates in {:.1?}", start.elapsed());
    Ok(())
}
