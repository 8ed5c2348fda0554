//! Step 2: calibrate recommended doses for expansion (RDEs).
//!
//! First from responses to exposure (efficacy and toxicity logistic curves on
//! log exposure, banded by Wald intervals), then from exposure to dose (a
//! log-log power law), bounded above by the MTD/MAD.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{
    fit_logistic_weighted, fitted_response_ci, BinomialObservation, CovariateTransform, FitResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryCount {
    pub events: u32,
    pub total: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureObservation {
    pub dose: f64,
    pub exposure: f64,
    #[serde(default)]
    pub efficacy: Option<BinaryCount>,
    #[serde(default)]
    pub toxicity: Option<BinaryCount>,
}

impl ExposureObservation {
    pub fn validate(&self) -> Result<()> {
        if !(self.dose.is_finite() && self.dose > 0.0) {
            return Err(Error::arg(format!("dose must be positive, got {}", self.dose)));
        }
        if !(self.exposure.is_finite() && self.exposure > 0.0) {
            return Err(Error::arg(format!("exposure must be positive, got {}", self.exposure)));
        }
        if self.efficacy.is_none() && self.toxicity.is_none() {
            return Err(Error::arg("observation carries neither efficacy nor toxicity counts"));
        }
        for c in self.efficacy.iter().chain(&self.toxicity) {
            if c.total == 0 || c.events > c.total {
                return Err(Error::arg(format!("count {}/{} is invalid", c.events, c.total)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Ok,
    /// Converged with a decreasing curve.
    NegativeSlope,
    /// No finite maximum (for example zero events everywhere).
    Uninformative,
}

impl FitStatus {
    fn of(fit: &FitResult) -> Self {
        if !fit.converged {
            FitStatus::Uninformative
        } else if fit.curve.slope < 0.0 {
            FitStatus::NegativeSlope
        } else {
            FitStatus::Ok
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureFits {
    pub efficacy: FitResult,
    pub toxicity: FitResult,
    pub efficacy_status: FitStatus,
    pub toxicity_status: FitStatus,
}

fn response_fit(data: &[ExposureObservation], pick: fn(&ExposureObservation) -> Option<BinaryCount>) -> Result<FitResult> {
    let obs: Vec<BinomialObservation> = data
        .iter()
        .filter_map(|o| pick(o).map(|c| BinomialObservation::new(o.exposure, c.events, c.total)))
        .collect();
    fit_logistic_weighted(&obs, CovariateTransform::NaturalLog)
}

/// Efficacy and toxicity curves on natural-log exposure.
pub fn fit_exposure_models(data: &[ExposureObservation]) -> Result<ExposureFits> {
    for o in data {
        o.validate()?;
    }
    let efficacy = response_fit(data, |o| o.efficacy)?;
    let toxicity = response_fit(data, |o| o.toxicity)?;
    Ok(ExposureFits {
        efficacy_status: FitStatus::of(&efficacy),
        toxicity_status: FitStatus::of(&toxicity),
        efficacy,
        toxicity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowCriteria {
    pub efficacy_floor: f64,
    pub toxicity_ceiling: f64,
    /// Two-sided confidence level of the response bands.
    pub level: f64,
    /// Exposure range searched for the window endpoints.
    pub search_min: f64,
    pub search_max: f64,
}

impl WindowCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.efficacy_floor) {
            return Err(Error::config("efficacy_floor", "must lie in [0, 1)"));
        }
        if !(self.toxicity_ceiling > 0.0 && self.toxicity_ceiling <= 1.0) {
            return Err(Error::config("toxicity_ceiling", "must lie in (0, 1]"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::config("level", "must lie in (0, 1)"));
        }
        if !(self.search_min > 0.0 && self.search_min < self.search_max && self.search_max.is_finite()) {
            return Err(Error::config("search_min", "need 0 < search_min < search_max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureWindow {
    pub lower_exposure: f64,
    pub upper_exposure: f64,
    pub efficacy_floor: f64,
    pub toxicity_ceiling: f64,
    /// The toxicity fit carried no signal, so the ceiling was not applied.
    pub ceiling_dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WindowOutcome {
    Feasible(ExposureWindow),
    Infeasible { reason: String },
}

/// Smallest `x` in `[lo, hi]` (log scale) where `pred` holds, for `pred`
/// false-then-true along the range.
fn bisect_log(lo: f64, hi: f64, pred: impl Fn(f64) -> Result<bool>) -> Result<f64> {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m.exp())? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b.exp())
}

pub fn derive_exposure_window(efficacy: &FitResult, toxicity: &FitResult, criteria: &WindowCriteria) -> Result<WindowOutcome> {
    criteria.validate()?;
    let (lo, hi) = (criteria.search_min, criteria.search_max);
    match FitStatus::of(efficacy) {
        FitStatus::Ok => {}
        FitStatus::NegativeSlope => {
            return Err(Error::Policy(
                "efficacy curve decreases with exposure; fall back to point estimates".into(),
            ))
        }
        FitStatus::Uninformative => {
            return Err(Error::Policy(
                "efficacy fit did not converge; fall back to point estimates".into(),
            ))
        }
    }
    let tox_status = FitStatus::of(toxicity);
    if tox_status == FitStatus::NegativeSlope {
        return Err(Error::Policy(
            "toxicity curve decreases with exposure; fall back to point estimates".into(),
        ));
    }

    let eff_lower = |e: f64| fitted_response_ci(efficacy, e, criteria.level).map(|ci| ci.lower);
    let lower = if eff_lower(lo)? >= criteria.efficacy_floor {
        lo
    } else if eff_lower(hi)? < criteria.efficacy_floor {
        return Ok(WindowOutcome::Infeasible {
            reason: format!(
                "efficacy lower bound stays below {} over the search range",
                criteria.efficacy_floor
            ),
        });
    } else {
        bisect_log(lo, hi, |e| Ok(eff_lower(e)? >= criteria.efficacy_floor))?
    };

    let ceiling_dropped = tox_status == FitStatus::Uninformative;
    let upper = if ceiling_dropped {
        hi
    } else {
        let tox_upper = |e: f64| fitted_response_ci(toxicity, e, criteria.level).map(|ci| ci.upper);
        if tox_upper(hi)? <= criteria.toxicity_ceiling {
            hi
        } else if tox_upper(lo)? > criteria.toxicity_ceiling {
            return Ok(WindowOutcome::Infeasible {
                reason: format!(
                    "toxicity upper bound exceeds {} over the search range",
                    criteria.toxicity_ceiling
                ),
            });
        } else {
            // Last exposure still under the ceiling: bisect the first one over it.
            let over = bisect_log(lo, hi, |e| Ok(tox_upper(e)? > criteria.toxicity_ceiling))?;
            over.min(hi)
        }
    };

    if lower > upper {
        return Ok(WindowOutcome::Infeasible {
            reason: format!("efficacy needs exposure {lower:.4} but toxicity allows at most {upper:.4}"),
        });
    }
    Ok(WindowOutcome::Feasible(ExposureWindow {
        lower_exposure: lower,
        upper_exposure: upper,
        efficacy_floor: criteria.efficacy_floor,
        toxicity_ceiling: criteria.toxicity_ceiling,
        ceiling_dropped,
    }))
}

/// `ln(exposure) = log_intercept + log_slope * ln(dose)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoseExposureModel {
    pub log_intercept: f64,
    pub log_slope: f64,
    pub residual_sd: f64,
}

impl DoseExposureModel {
    pub fn exposure(&self, dose: f64) -> f64 {
        (self.log_intercept + self.log_slope * dose.ln()).exp()
    }

    pub fn dose_for(&self, exposure: f64) -> Result<f64> {
        if self.log_slope <= 0.0 {
            return Err(Error::arg("dose-exposure slope must be positive to invert"));
        }
        Ok(((exposure.ln() - self.log_intercept) / self.log_slope).exp())
    }
}

pub fn fit_dose_exposure(data: &[ExposureObservation]) -> Result<DoseExposureModel> {
    let mut xs = Vec::with_capacity(data.len());
    let mut ys = Vec::with_capacity(data.len());
    for o in data {
        if !(o.exposure.is_finite() && o.exposure > 0.0) {
            return Err(Error::arg(format!("exposure must be positive, got {}", o.exposure)));
        }
        if !(o.dose.is_finite() && o.dose > 0.0) {
            return Err(Error::arg(format!("dose must be positive, got {}", o.dose)));
        }
        xs.push(o.dose.ln());
        ys.push(o.exposure.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if xs.is_empty() || sxx <= 0.0 {
        return Err(Error::DegenerateDesign("need at least two distinct doses".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let log_slope = sxy / sxx;
    let log_intercept = my - log_slope * mx;
    let residual_sd = if xs.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - log_intercept - log_slope * x).powi(2))
            .sum();
        (rss / (n - 2.0)).sqrt()
    } else {
        0.0
    };
    Ok(DoseExposureModel {
        log_intercept,
        log_slope,
        residual_sd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RdeTag {
    MinimumActive,
    Intermediate,
    NearMtd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdeDose {
    pub dose: f64,
    pub tag: RdeTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdeSet {
    pub doses: Vec<RdeDose>,
    /// Set when fewer than the requested number of distinct doses survive.
    pub note: Option<String>,
}

impl RdeSet {
    pub fn values(&self) -> Vec<f64> {
        self.doses.iter().map(|d| d.dose).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdeOptions {
    pub count: usize,
    /// Dose grid step in mg.
    pub granularity: f64,
}

impl Default for RdeOptions {
    fn default() -> Self {
        Self {
            count: 3,
            granularity: 25.0,
        }
    }
}

fn snap(dose: f64, grid: f64, ceiling: f64) -> f64 {
    let mut d = ((dose / grid).round() * grid).max(grid);
    if d > ceiling {
        d = (ceiling / grid).floor() * grid;
        if d <= 0.0 {
            d = ceiling;
        }
    }
    d
}

pub fn propose_rdes(
    window: &ExposureWindow,
    model: &DoseExposureModel,
    mtd_or_mad: f64,
    options: &RdeOptions,
) -> Result<RdeSet> {
    if options.count < 3 {
        return Err(Error::arg("at least three RDEs must be requested"));
    }
    if !(options.granularity > 0.0) {
        return Err(Error::arg("granularity must be positive"));
    }
    if !(mtd_or_mad > 0.0) {
        return Err(Error::arg("MTD/MAD must be positive"));
    }
    if window.lower_exposure > window.upper_exposure {
        return Err(Error::Infeasible("exposure window is empty".into()));
    }
    let dose_min = model.dose_for(window.lower_exposure)?;
    let dose_max = model.dose_for(window.upper_exposure)?.min(mtd_or_mad);
    if dose_min > dose_max {
        return Err(Error::Infeasible(format!(
            "minimum active dose {dose_min:.1} exceeds the upper dose bound {dose_max:.1}"
        )));
    }

    let k = options.count;
    let ratio = dose_max / dose_min;
    let mut values: Vec<f64> = (0..k)
        .map(|i| dose_min * ratio.powf(i as f64 / (k - 1) as f64))
        .map(|d| snap(d, options.granularity, mtd_or_mad))
        .collect();
    values.dedup();

    let last = values.len() - 1;
    let doses = values
        .iter()
        .enumerate()
        .map(|(i, &dose)| RdeDose {
            dose,
            tag: if i == last {
                RdeTag::NearMtd
            } else if i == 0 {
                RdeTag::MinimumActive
            } else {
                RdeTag::Intermediate
            },
        })
        .collect();
    let note = (values.len() < k).then(|| {
        format!(
            "only {} distinct dose(s) remain after clamping to {mtd_or_mad} mg and rounding to {} mg",
            values.len(),
            options.granularity
        )
    });
    Ok(RdeSet { doses, note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::LogisticCurve;

    fn fixed_fit(a: f64, b: f64) -> FitResult {
        FitResult {
            curve: LogisticCurve::new(a, b, CovariateTransform::NaturalLog),
            covariance: [[0.0; 2]; 2],
            log_likelihood: 0.0,
            converged: true,
            iterations: 0,
        }
    }

    fn identity_model() -> DoseExposureModel {
        DoseExposureModel {
            log_intercept: 0.0,
            log_slope: 1.0,
            residual_sd: 0.0,
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

    #[test]
    fn closed_form_window() {
        let criteria = WindowCriteria {
            efficacy_floor: 0.5,
            toxicity_ceiling: 0.3,
            level: 0.95,
            search_min: 1.0,
            search_max: 1e4,
        };
        let w = derive_exposure_window(&fixed_fit(-3.0, 1.0), &fixed_fit(-6.0, 1.0), &criteria).unwrap();
        let WindowOutcome::Feasible(w) = w else { panic!("{w:?}") };
        let upper = (6.0 + crate::stats::logit(0.3)).exp();
        assert!((w.lower_exposure / 3f64.exp() - 1.0).abs() < 1e-9);
        assert!((w.upper_exposure / upper - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unattainable_floor_is_infeasible() {
        let criteria = WindowCriteria {
            efficacy_floor: 0.9,
            toxicity_ceiling: 0.3,
            level: 0.9,
            search_min: 1.0,
            search_max: 10.0,
        };
        let w = derive_exposure_window(&fixed_fit(-3.0, 1.0), &fixed_fit(-6.0, 1.0), &criteria).unwrap();
        assert!(matches!(w, WindowOutcome::Infeasible { .. }));
    }

    #[test]
    fn geometric_rdes_on_grid() {
        let set = propose_rdes(&window(250.0, 500.0), &identity_model(), 500.0, &RdeOptions::default()).unwrap();
        assert_eq!(set.values(), vec![250.0, 350.0, 500.0]);
        assert_eq!(set.doses[0].tag, RdeTag::MinimumActive);
        assert_eq!(set.doses[1].tag, RdeTag::Intermediate);
        assert_eq!(set.doses[2].tag, RdeTag::NearMtd);
        assert!(set.note.is_none());
    }

    #[test]
    fn clamps_to_mtd() {
        let set = propose_rdes(&window(300.0, 800.0), &identity_model(), 500.0, &RdeOptions::default()).unwrap();
        assert_eq!(*set.values().last().unwrap(), 500.0);
    }

    #[test]
    fn collapsed_interval_notes() {
        let set = propose_rdes(&window(301.0, 305.0), &identity_model(), 500.0, &RdeOptions::default()).unwrap();
        assert_eq!(set.values(), vec![300.0]);
        assert!(set.note.is_some());
    }

    #[test]
    fn power_law_is_exact() {
        let data: Vec<ExposureObservation> = [50.0, 100.0, 400.0]
            .iter()
            .map(|&d| ExposureObservation {
                dose: d,
                exposure: 2.0 * d,
                efficacy: None,
                toxicity: Some(BinaryCount { events: 0, total: 3 }),
            })
            .collect();
        let m = fit_dose_exposure(&data).unwrap();
        assert!((m.log_slope - 1.0).abs() < 1e-12);
        assert!((m.log_intercept - 2f64.ln()).abs() < 1e-12);
        assert!(m.residual_sd < 1e-12);
        assert!((m.dose_for(m.exposure(123.0)).unwrap() - 123.0).abs() < 1e-9);
    }

    #[test]
    fn single_dose_is_degenerate() {
        let o = ExposureObservation {
            dose: 100.0,
            exposure: 5.0,
            efficacy: None,
            toxicity: Some(BinaryCount { events: 0, total: 3 }),
        };
        assert!(matches!(fit_dose_exposure(&[o, o]), Err(Error::DegenerateDesign(_))));
    }
}
