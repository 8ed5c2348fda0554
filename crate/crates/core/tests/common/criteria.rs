//! The library-level acceptance criteria. Each returns a verdict and a one
//! line summary; the acceptance harness prints them and the integration
//! tests assert on them.
#![allow(dead_code)]

use std::time::{Duration, Instant};

use dosefind::calibration::{
    derive_exposure_window, propose_rdes, DoseExposureModel, ExposureWindow, RdeOptions, WindowCriteria, WindowOutcome,
};
use dosefind::escalation::{simulate_many, stage1_decision, DoseOutcome, EscalationConfig};
use dosefind::factorial::{
    all_schemes, fit_power_likelihood, simulate_cohort_data,
    simulate_replicates, summarize_replicates, OperatingCharacteristics, PowerWeights, ReplicateResult, TrueCurveSet,
};
use dosefind::stats::{
    beta_interval_prob, fit_logistic_weighted, pava_isotonic, BetaParams, BinomialObservation, CovariateTransform,
    FitResult, LogisticCurve,
};
use rand::{Rng, SeedableRng};

use super::datasets::{logistic_datasets, oracle_cells, score_norm, separable_datasets};
use super::oracles::{beta_mass_quadrature, grid_search_mle, isotonic_grid_dp, stage1_oracle};

pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &'static str, failures: Vec<String>, summary: String) -> Self {
        let passed = failures.is_empty();
        let detail = if passed {
            summary
        } else {
            let shown: Vec<&str> = failures.iter().take(5).map(String::as_str).collect();
            format!("{summary}; {} failure(s): {}", failures.len(), shown.join("; "))
        };
        Self { name, passed, detail }
    }
}

fn seconds(d: Duration) -> f64 {
    d.as_secs_f64()
}

pub const BETA_CASES: usize = 200;

pub fn beta_interval_probabilities() -> Verdict {
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut elapsed = Duration::ZERO;
    let mut worst = 0.0f64;
    for _ in 0..BETA_CASES {
        let a = (rng.random_range(0.5f64.ln()..60f64.ln())).exp();
        let b = (rng.random_range(0.5f64.ln()..60f64.ln())).exp();
        let (mut lo, mut hi) = (rng.random::<f64>(), rng.random::<f64>());
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        let start = Instant::now();
        let got = beta_interval_prob(BetaParams { alpha: a, beta: b }, lo, hi).unwrap();
        elapsed += start.elapsed();
        let want = beta_mass_quadrature(a, b, lo, hi);
        worst = worst.max((got - want).abs());
        if (got - want).abs() > 1e-8 {
            failures.push(format!("Beta({a:.3},{b:.3}) ({lo:.4},{hi:.4}): {got} vs {want}"));
        }
    }

    let pi = std::f64::consts::PI;
    let closed: Vec<(f64, f64, f64, f64, f64)> = vec![
        (1.0, 1.0, 0.0, 0.3, 0.3),
        (1.0, 2.0, 0.0, 0.5, 0.75),
        (4.0, 1.0, 0.35, 1.0, 1.0 - 0.35f64.powi(4)),
        (3.0, 1.0, 0.2, 0.7, 0.7f64.powi(3) - 0.2f64.powi(3)),
        (1.0, 5.0, 0.1, 0.4, 0.9f64.powi(5) - 0.6f64.powi(5)),
        (2.0, 2.0, 0.25, 0.6, {
            let f = |x: f64| 3.0 * x * x - 2.0 * x * x * x;
            f(0.6) - f(0.25)
        }),
        (0.5, 0.5, 0.0, 0.3, 2.0 / pi * 0.3f64.sqrt().asin()),
        (0.5, 0.5, 0.1, 0.9, 2.0 / pi * (0.9f64.sqrt().asin() - 0.1f64.sqrt().asin())),
        (7.0, 3.0, 0.4, 0.4, 0.0),
        (2.0, 9.0, 0.0, 1.0, 1.0),
    ];
    let mut worst_closed = 0.0f64;
    for &(a, b, lo, hi, want) in &closed {
        let start = Instant::now();
        let got = beta_interval_prob(BetaParams { alpha: a, beta: b }, lo, hi).unwrap();
        elapsed += start.elapsed();
        worst_closed = worst_closed.max((got - want).abs());
        if (got - want).abs() > 1e-10 {
            failures.push(format!("closed form Beta({a},{b}) ({lo},{hi}): {got} vs {want}"));
        }
        if a >= 1.0 && b >= 1.0 && (beta_mass_quadrature(a, b, lo, hi) - want).abs() > 1e-10 {
            failures.push(format!("quadrature disagrees with closed form Beta({a},{b})"));
        }
    }
    if elapsed.as_secs_f64() >= 1.0 {
        failures.push(format!("runtime {:.3} s", seconds(elapsed)));
    }
    Verdict::new(
        "beta interval probabilities",
        failures,
        format!(
            "{BETA_CASES} random cases max err {worst:.1e}, {} closed forms max err {worst_closed:.1e}, {:.4} s",
            closed.len(),
            seconds(elapsed)
        ),
    )
}

fn label(d: dosefind::escalation::Decision) -> String {
    serde_json::to_value(d).unwrap().as_str().unwrap().to_owned()
}

pub fn stage1_oracle_grid() -> Verdict {
    let mut failures = Vec::new();
    let mut cells = 0;
    let mut elapsed = Duration::ZERO;
    for p_t in [0.20, 0.25, 0.30] {
        for gamma in [0.75, 0.95] {
            let mut cfg = EscalationConfig::new(p_t, vec![100.0, 200.0]);
            cfg.epsilon1 = 0.05;
            cfg.epsilon2 = 0.05;
            cfg.gamma = gamma;
            for n in 1..=15u32 {
                for x in 0..=n {
                    cells += 1;
                    let start = Instant::now();
                    let got = stage1_decision(&DoseOutcome::new(100.0, n, x), &cfg).unwrap();
                    elapsed += start.elapsed();
                    let want = stage1_oracle(
                        (cfg.prior.alpha, cfg.prior.beta),
                        n,
                        x,
                        p_t,
                        (0.05, 0.05),
                        gamma,
                        cfg.exclusion_threshold,
                        cfg.overdose_control,
                    );
                    if label(got) != want {
                        failures.push(format!("p_T={p_t} gamma={gamma} {x}/{n}: {} vs {want}", label(got)));
                    }
                }
            }
        }
    }
    if seconds(elapsed) >= 5.0 {
        failures.push(format!("runtime {:.3} s", seconds(elapsed)));
    }
    let matched = cells - failures.len();
    Verdict::new(
        "stage-1 decision oracle",
        failures,
        format!("{matched}/{cells} cells match, {:.4} s", seconds(elapsed)),
    )
}

pub fn weighted_logistic_ml() -> Verdict {
    let mut failures = Vec::new();
    let mut worst_coord = 0.0f64;
    let mut worst_score = 0.0f64;
    let sets = logistic_datasets();
    for d in &sets {
        let fit = match fit_logistic_weighted(&d.cells, d.transform) {
            Ok(f) => f,
            Err(e) => {
                failures.push(format!("{}: {e}", d.name));
                continue;
            }
        };
        if !fit.converged {
            failures.push(format!("{}: not converged", d.name));
        }
        let cells = oracle_cells(d);
        let (a, b) = grid_search_mle(&cells);
        let err = (fit.curve.intercept - a).abs().max((fit.curve.slope - b).abs());
        worst_coord = worst_coord.max(err);
        if err > 1e-3 {
            failures.push(format!(
                "{}: ({}, {}) vs oracle ({a}, {b})",
                d.name, fit.curve.intercept, fit.curve.slope
            ));
        }
        let s = score_norm(&cells, fit.curve.intercept, fit.curve.slope);
        worst_score = worst_score.max(s);
        if s >= 1e-8 {
            failures.push(format!("{}: score max-norm {s:.2e}", d.name));
        }
    }
    let separable = separable_datasets(50, 11);
    let mut flagged = 0;
    for (i, (transform, cells)) in separable.iter().enumerate() {
        match fit_logistic_weighted(cells, *transform) {
            Ok(f) if f.converged => failures.push(format!("separable #{i} reported converged")),
            _ => flagged += 1,
        }
    }
    Verdict::new(
        "weighted logistic ML",
        failures,
        format!(
            "{} datasets max coord err {worst_coord:.1e}, max score {worst_score:.1e}; {flagged}/{} separable flagged",
            sets.len(),
            separable.len()
        ),
    )
}

pub fn pava_against_grid() -> Verdict {
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let len = rng.random_range(1..=4usize);
        let rates: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let weights: Vec<f64> = (0..len).map(|_| rng.random_range(0.2..5.0)).collect();
        let got = pava_isotonic(&rates, &weights).unwrap();
        let want = isotonic_grid_dp(&rates, &weights, 10_000);
        let err = got.iter().zip(&want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
        if err > 1e-3 {
            failures.push(format!("instance {i}: {got:?} vs {want:?}"));
        }
    }
    Verdict::new("PAVA", failures, format!("100 instances, max err {worst:.1e}"))
}

fn coord_gap(a: &FitResult, b: &FitResult) -> f64 {
    (a.curve.intercept - b.curve.intercept)
        .abs()
        .max((a.curve.slope - b.curve.slope).abs())
}

pub fn power_likelihood_degeneracies() -> Verdict {
    let mut failures = Vec::new();
    let truth = TrueCurveSet::default_set();
    let (_, design) = all_schemes().into_iter().next().unwrap();
    let hd = design.high_dose;
    let mut worst_pooled = 0.0f64;
    let mut worst_single = 0.0f64;
    for r in 0..20u64 {
        let data = simulate_cohort_data(&design, &truth, 99, r);
        let k = data.cohorts.len();

        let ones = PowerWeights { alphas: vec![1.0; k], sensitive_index: 0 };
        let pooled_obs: Vec<BinomialObservation> = data
            .cohorts
            .iter()
            .flatten()
            .map(|a| BinomialObservation::new(a.dose / hd, a.responders, a.total))
            .collect();
        match (
            fit_power_likelihood(&data, &ones, hd),
            fit_logistic_weighted(&pooled_obs, CovariateTransform::Identity),
        ) {
            (Ok(w), Ok(p)) => {
                let gap = coord_gap(&w.fit, &p);
                worst_pooled = worst_pooled.max(gap);
                if gap > 1e-10 {
                    failures.push(format!("replicate {r}: all-ones differs from pooled by {gap:.2e}"));
                }
            }
            (a, b) => failures.push(format!("replicate {r}: {:?} / {:?}", a.err(), b.err())),
        }

        let mut alphas = vec![0.0; k];
        alphas[0] = 1.0;
        let first = PowerWeights { alphas, sensitive_index: 0 };
        let first_obs: Vec<BinomialObservation> = data.cohorts[0]
            .iter()
            .map(|a| BinomialObservation::new(a.dose / hd, a.responders, a.total))
            .collect();
        match (
            fit_power_likelihood(&data, &first, hd),
            fit_logistic_weighted(&first_obs, CovariateTransform::Identity),
        ) {
            (Ok(w), Ok(p)) => {
                let gap = coord_gap(&w.fit, &p);
                worst_single = worst_single.max(gap);
                if gap > 1e-10 {
                    failures.push(format!("replicate {r}: zero weights differ from cohort 1 by {gap:.2e}"));
                }
            }
            (a, b) => failures.push(format!("replicate {r}: {:?} / {:?}", a.err(), b.err())),
        }
    }
    Verdict::new(
        "power likelihood degeneracies",
        failures,
        format!("20 datasets, all-ones gap {worst_pooled:.1e}, cohort-1-only gap {worst_single:.1e}"),
    )
}

pub const TABLE2_SEED: u64 = 20240601;
pub const TABLE2_LEVELS: [f64; 3] = [0.80, 0.90, 0.95];

pub struct Table2Run {
    pub schemes: Vec<(String, Vec<ReplicateResult>, OperatingCharacteristics)>,
    pub elapsed: Duration,
}

/// Every scheme, sequentially, keeping the per-replicate results.
pub fn run_table2(replicates: usize) -> Table2Run {
    let truth = TrueCurveSet::default_set();
    let start = Instant::now();
    let schemes = all_schemes()
        .into_iter()
        .map(|(name, design)| {
            let results = simulate_replicates(&design, &truth, replicates, TABLE2_SEED, &TABLE2_LEVELS).unwrap();
            let oc = summarize_replicates(&results, &TABLE2_LEVELS, TABLE2_SEED);
            (name, results, oc)
        })
        .collect();
    Table2Run { schemes, elapsed: start.elapsed() }
}

/// The five structural claims (a) to (e), one verdict each, plus the runtime.
pub fn table2_structure(run: &Table2Run) -> Vec<Verdict> {
    let fractional = &run.schemes[..4];
    let full = &run.schemes[4];
    let mut out = Vec::new();

    let mut fails = Vec::new();
    let p: Vec<f64> = run.schemes.iter().map(|s| s.2.p_select).collect();
    if p[..4].iter().any(|x| x.to_bits() != p[0].to_bits()) {
        fails.push(format!("fractional p_select differ: {:?}", &p[..4]));
    }
    if !(p[0] - p[4] >= 0.05) {
        fails.push(format!("gap {:.4} below 0.05", p[0] - p[4]));
    }
    out.push(Verdict::new(
        "table 2 (a) p_select",
        fails,
        format!("schemes 1-4 {:.4}, scheme 5 {:.4}", p[0], p[4]),
    ));

    let mut fails = Vec::new();
    for (name, results, oc) in &run.schemes {
        if let Some(r) = results.iter().find(|r| r.doses.windows(2).any(|w| w[1] > w[0])) {
            fails.push(format!("scheme {name} replicate {} doses {:?}", r.replicate, r.doses));
        }
        if oc.levels.windows(2).any(|w| w[1].rr_mean > w[0].rr_mean) {
            fails.push(format!("scheme {name} mean RR rises with level"));
        }
    }
    let rr1: Vec<String> = run.schemes[0].2.levels.iter().map(|l| format!("{:.1}", l.rr_mean)).collect();
    out.push(Verdict::new(
        "table 2 (b) dose and RR fall with level",
        fails,
        format!("scheme 1 mean RR {}", rr1.join(" -> ")),
    ));

    let mut fails = Vec::new();
    let mut max_dose = 0.0f64;
    let mut max_rr = 0.0f64;
    for (name, results, _) in &run.schemes {
        for r in results {
            max_dose = r.doses.iter().copied().fold(max_dose, f64::max);
            max_rr = r.relative_rr.iter().copied().fold(max_rr, f64::max);
            if r.doses.iter().any(|&d| d > 500.0) || r.relative_rr.iter().any(|&x| x > 100.0) {
                fails.push(format!("scheme {name} replicate {}", r.replicate));
            }
        }
    }
    out.push(Verdict::new(
        "table 2 (c) dose <= 500, RR <= 100",
        fails,
        format!("max dose {max_dose:.1}, max RR {max_rr:.1}"),
    ));

    let mut fails = Vec::new();
    let scheme2 = &fractional[1].2;
    for (k, level) in TABLE2_LEVELS.iter().enumerate() {
        for (name, _, oc) in fractional.iter().filter(|s| s.0 != fractional[1].0) {
            if oc.levels[k].dose_sd <= scheme2.levels[k].dose_sd {
                fails.push(format!("level {level}: scheme {name} dose SD {:.2} <= scheme 2", oc.levels[k].dose_sd));
            }
            if oc.levels[k].rr_sd <= scheme2.levels[k].rr_sd {
                fails.push(format!("level {level}: scheme {name} RR SD {:.2} <= scheme 2", oc.levels[k].rr_sd));
            }
        }
    }
    let sds: Vec<String> = scheme2.levels.iter().map(|l| format!("{:.1}/{:.1}", l.dose_sd, l.rr_sd)).collect();
    out.push(Verdict::new(
        "table 2 (d) scheme 2 smallest SDs",
        fails,
        format!("scheme 2 dose/RR SD by level {}", sds.join(", ")),
    ));

    let mut fails = Vec::new();
    for (name, _, oc) in &run.schemes {
        if oc.levels.windows(2).any(|w| w[1].pct_rr_below_70 < w[0].pct_rr_below_70) {
            fails.push(format!("scheme {name}"));
        }
    }
    let pct: Vec<String> = run.schemes[0].2.levels.iter().map(|l| format!("{:.1}", l.pct_rr_below_70)).collect();
    out.push(Verdict::new(
        "table 2 (e) %RR<70 rises with level",
        fails,
        format!("scheme 1 {}", pct.join(" -> ")),
    ));

    let replicates = run.schemes[0].1.len();
    let mut fails = Vec::new();
    if seconds(run.elapsed) >= 120.0 {
        fails.push(format!("{:.1} s", seconds(run.elapsed)));
    }
    if full.1.len() != replicates {
        fails.push("replicate counts differ".into());
    }
    out.push(Verdict::new(
        "table 2 runtime",
        fails,
        format!("{replicates} replicates x 5 schemes in {:.1} s single-threaded", seconds(run.elapsed)),
    ));
    out
}

pub const ESCALATION_TRUE_TOX: [f64; 5] = [0.05, 0.15, 0.30, 0.45, 0.60];

pub fn escalation_config() -> EscalationConfig {
    let mut cfg = EscalationConfig::new(0.30, vec![100.0, 200.0, 400.0, 800.0, 1600.0]);
    cfg.cohort_size = 3;
    cfg.max_subjects = 30;
    cfg
}

pub fn escalation_operating_characteristics() -> Verdict {
    let start = Instant::now();
    let on = escalation_config();
    let mut off = on.clone();
    off.overdose_control = false;
    let with = simulate_many(&ESCALATION_TRUE_TOX, &on, 2024, 1000).unwrap();
    let without = simulate_many(&ESCALATION_TRUE_TOX, &off, 2024, 1000).unwrap();
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    if with.modal_mtd() != Some(2) {
        failures.push(format!("modal MTD index {:?}", with.modal_mtd()));
    }
    if !(with.mean_overdose_fraction < without.mean_overdose_fraction) {
        failures.push(format!(
            "overdose fraction {:.4} not below {:.4}",
            with.mean_overdose_fraction, without.mean_overdose_fraction
        ));
    }
    if seconds(elapsed) >= 30.0 {
        failures.push(format!("runtime {:.1} s", seconds(elapsed)));
    }
    Verdict::new(
        "escalation operating characteristics",
        failures,
        format!(
            "modal MTD dose {} (rate {:.3}); overdose fraction {:.4} with control vs {:.4} without; {:.1} s",
            with.modal_mtd().map_or(0, |i| i + 1),
            with.modal_mtd().map_or(0.0, |i| with.selection_rate(i)),
            with.mean_overdose_fraction,
            without.mean_overdose_fraction,
            seconds(elapsed)
        ),
    )
}

fn fixed_fit(a: f64, b: f64) -> FitResult {
    FitResult {
        curve: LogisticCurve::new(a, b, CovariateTransform::NaturalLog),
        covariance: [[0.0; 2]; 2],
        log_likelihood: 0.0,
        converged: true,
        iterations: 0,
    }
}

fn window(lo: f64, hi: f64) -> ExposureWindow {
    ExposureWindow {
        lower_exposure: lo,
        upper_exposure: hi,
        efficacy_floor: 0.5,
        toxicity_ceiling: 0.3,
        ceiling_dropped: false,
    }
}

pub fn rde_closed_form() -> Verdict {
    let mut failures = Vec::new();
    let criteria = WindowCriteria {
        efficacy_floor: 0.5,
        toxicity_ceiling: 0.3,
        level: 0.95,
        search_min: 1.0,
        search_max: 1e4,
    };
    let want_lo = 3f64.exp();
    let want_hi = (6.0 + (0.3f64 / 0.7).ln()).exp();
    let mut rel = f64::NAN;
    match derive_exposure_window(&fixed_fit(-3.0, 1.0), &fixed_fit(-6.0, 1.0), &criteria) {
        Ok(WindowOutcome::Feasible(w)) => {
            rel = (w.lower_exposure / want_lo - 1.0).abs().max((w.upper_exposure / want_hi - 1.0).abs());
            if !(rel <= 1e-9) {
                failures.push(format!("window [{}, {}]", w.lower_exposure, w.upper_exposure));
            }
        }
        other => failures.push(format!("{other:?}")),
    }

    let identity = DoseExposureModel { log_intercept: 0.0, log_slope: 1.0, residual_sd: 0.0 };
    let opts = RdeOptions::default();
    match propose_rdes(&window(250.0, 500.0), &identity, 500.0, &opts) {
        Ok(s) if s.values() == [250.0, 350.0, 500.0] && s.note.is_none() => {}
        other => failures.push(format!("geometric example: {other:?}")),
    }
    match propose_rdes(&window(300.0, 800.0), &identity, 500.0, &opts) {
        Ok(s) if s.values().last() == Some(&500.0) && s.values().len() == 3 => {}
        other => failures.push(format!("clamp example: {other:?}")),
    }
    match propose_rdes(&window(301.0, 305.0), &identity, 500.0, &opts) {
        Ok(s) if s.values().len() == 1 && s.note.is_some() => {}
        other => failures.push(format!("collapse example: {other:?}")),
    }
    Verdict::new(
        "RDE closed form",
        failures,
        format!("window relative error {rel:.1e}; 3 proposal examples"),
    )
}
