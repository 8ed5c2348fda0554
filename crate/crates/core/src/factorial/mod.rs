//! Step 3: randomized fractional-factorial dose optimization across tumor
//! cohorts, analysed with a power likelihood that borrows from less
//! sensitive cohorts in proportion to their response at the high dose.

mod analysis;
mod design;
mod oc;
mod truth;

pub use analysis::{
    compute_power_weights, fit_power_likelihood, identify_sensitive_cohort, select_optimal_dose,
    simulate_cohort_data, ArmData, CohortData, DoseResponseFit, OptimalDoseResult, PowerWeights,
};
pub use design::{
    all_schemes, build_design, build_full_design, scheme, DesignVariant, FactorialDesign, FULL_GRID,
    SCHEME_HIGH_DOSE, SCHEME_LOW_DOSES,
};
pub use oc::{
    compare_schemes, run_operating_characteristics, run_operating_characteristics_par, run_replicate,
    simulate_replicates, simulate_replicates_par, summarize_replicates, LevelSummary, OperatingCharacteristics,
    ReplicateResult, SchemeResult,
};
pub use truth::{TrueCurveSet, DEFAULT_RESPONSE_AT_500, DEFAULT_SLOPE};
