//! Recommended doses for expansion from exposure-response data.
//!
//! cargo run --example rde_calibration -- [exposure.csv]

use std::fs::File;

use dosefind::calibration::{
    derive_exposure_window, fit_dose_exposure, fit_exposure_models, propose_rdes, RdeOptions, WindowCriteria,
    WindowOutcome,
};
use dosefind::io::read_exposure_csv;

fn main() -> dosefind::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../cli/configs/exposure.csv").into());
    let data = read_exposure_csv(File::open(&path)?)?;

    let fits = fit_exposure_models(&data)?;
    let criteria = WindowCriteria {
        efficacy_floor: 0.30,
        toxicity_ceiling: 0.40,
        level: 0.80,
        search_min: data.iter().map(|o| o.exposure).fold(f64::INFINITY, f64::min),
        search_max: data.iter().map(|o| o.exposure).fold(0.0, f64::max),
    };
    let e = &fits.efficacy.curve;
    let t = &fits.toxicity.curve;
    println!("efficacy: logit p = {:.3} + {:.3} ln(exposure) [{:?}]", e.intercept, e.slope, fits.efficacy_status);
    println!("toxicity: logit p = {:.3} + {:.3} ln(exposure) [{:?}]", t.intercept, t.slope, fits.toxicity_status);

    let window = match derive_exposure_window(&fits.efficacy, &fits.toxicity, &criteria)? {
        WindowOutcome::Feasible(w) => w,
        WindowOutcome::Infeasible { reason } => {
            println!("no exposure window: {reason}");
            return Ok(());
        }
    };
    println!("exposure window [{:.1}, {:.1}]", window.lower_exposure, window.upper_exposure);

    let model = fit_dose_exposure(&data)?;
    println!("ln(exposure) = {:.3} + {:.3} ln(dose), residual sd {:.3}", model.log_intercept, model.log_slope, model.residual_sd);

    let rdes = propose_rdes(&window, &model, 800.0, &RdeOptions::default())?;
    for d in &rdes.doses {
        println!("  {:>6.1} mg  {:?}", d.dose, d.tag);
    }
    if let Some(note) = rdes.note {
        println!("note: {note}");
    }
    Ok(())
}
