//! A single factorial replicate: simulate cohort data, pick the sensitive
//! cohort, fit the power likelihood and choose doses at three CI levels.

use dosefind::factorial::{
    compute_power_weights, fit_power_likelihood, identify_sensitive_cohort, scheme, select_optimal_dose,
    simulate_cohort_data, TrueCurveSet, SCHEME_HIGH_DOSE,
};

fn main() -> dosefind::Result<()> {
    let design = scheme(1)?;
    let truth = TrueCurveSet::default_set();
    let data = simulate_cohort_data(&design, &truth, 42, 0);

    for (c, arms) in data.cohorts.iter().enumerate() {
        let cells: Vec<String> = arms.iter().map(|a| format!("{}: {}/{}", a.dose, a.responders, a.total)).collect();
        println!("cohort {}  {}", c + 1, cells.join("  "));
    }

    let sensitive = identify_sensitive_cohort(&data, SCHEME_HIGH_DOSE)?;
    let weights = compute_power_weights(&data, sensitive, SCHEME_HIGH_DOSE)?;
    let alphas: Vec<String> = weights.alphas.iter().map(|a| format!("{a:.2}")).collect();
    println!("sensitive cohort {}, weights [{}]", sensitive + 1, alphas.join(", "));

    let fit = fit_power_likelihood(&data, &weights, SCHEME_HIGH_DOSE)?;
    println!("fit: intercept {:.3}, slope {:.3} per {SCHEME_HIGH_DOSE} mg", fit.fit.curve.intercept, fit.fit.curve.slope);

    let floor = design.lowest_dose();
    for level in [0.80, 0.90, 0.95] {
        let r = select_optimal_dose(&fit, SCHEME_HIGH_DOSE, level, floor)?;
        let rr = 100.0 * truth.response(sensitive, r.chosen_dose) / truth.response(sensitive, SCHEME_HIGH_DOSE);
        println!("  {:.0}%: target {:.3}, dose {:.1} mg, relative RR {rr:.1}%", 100.0 * level, r.target_response, r.chosen_dose);
    }
    Ok(())
}
