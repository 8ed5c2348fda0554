//! Run configuration: one TOML document per invocation, parsed strictly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{ExposureObservation, RdeOptions};
use crate::error::{Error, Result};
use crate::escalation::{EscalationConfig, TrialHistory};
use crate::factorial::{build_design, build_full_design, scheme, FactorialDesign, TrueCurveSet};
use crate::stats::{CovariateTransform, LogisticCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Step {
    EscalateDecide,
    EscalateTable,
    EscalateSimulate,
    RdeCalibrate,
    OptimizeSimulate,
    Serve,
}

impl Step {
    pub fn name(self) -> &'static str {
        match self {
            Step::EscalateDecide => "escalate-decide",
            Step::EscalateTable => "escalate-table",
            Step::EscalateSimulate => "escalate-simulate",
            Step::RdeCalibrate => "rde-calibrate",
            Step::OptimizeSimulate => "optimize-simulate",
            Step::Serve => "serve",
        }
    }

    pub fn needs_seed(self) -> bool {
        matches!(self, Step::EscalateSimulate | Step::OptimizeSimulate)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// JSON trial history (escalate-decide) or exposure CSV (rde-calibrate).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Per-replicate CSV dump for optimize-simulate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecideParams {
    pub history: TrialHistory,
}

fn default_n_max() -> u32 {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableParams {
    #[serde(default = "default_n_max")]
    pub n_max: u32,
}

fn default_trials() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscalationSimParams {
    pub true_tox: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_true")]
    pub parallel: bool,
}

fn default_level() -> f64 {
    0.95
}

fn default_count() -> usize {
    3
}

fn default_granularity() -> f64 {
    25.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationParams {
    pub efficacy_floor: f64,
    pub toxicity_ceiling: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Exposure search range; the observed range when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_max: Option<f64>,
    pub mtd_or_mad: f64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_granularity")]
    pub granularity: f64,
    /// Inline data, used when `paths.input` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observations: Option<Vec<ExposureObservation>>,
}

impl CalibrationParams {
    pub fn rde_options(&self) -> RdeOptions {
        RdeOptions {
            count: self.count,
            granularity: self.granularity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub name: String,
    /// One of the five built-in schemes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_dose: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_doses: Option<Vec<f64>>,
    /// Full-factorial grid; requires `cohort_count`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dose_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_per_arm: Option<u32>,
}

impl SchemeSpec {
    pub fn to_design(&self, key: &str) -> Result<FactorialDesign> {
        let with_key = |e: Error| match e {
            Error::Config { key: k, constraint } => Error::config(format!("{key}.{k}"), constraint),
            other => other,
        };
        match (self.preset, &self.low_doses, &self.dose_grid) {
            (Some(n), None, None) => scheme(n).map_err(|_| Error::config(format!("{key}.preset"), "must be 1-5")),
            (None, Some(lds), None) => {
                let hd = self.high_dose.ok_or_else(|| Error::config(format!("{key}.high_dose"), "required"))?;
                let n = self.n_per_arm.ok_or_else(|| Error::config(format!("{key}.n_per_arm"), "required"))?;
                build_design(lds.len(), hd, lds, n).map_err(with_key)
            }
            (None, None, Some(grid)) => {
                let hd = self.high_dose.ok_or_else(|| Error::config(format!("{key}.high_dose"), "required"))?;
                let n = self.n_per_arm.ok_or_else(|| Error::config(format!("{key}.n_per_arm"), "required"))?;
                let k = self
                    .cohort_count
                    .ok_or_else(|| Error::config(format!("{key}.cohort_count"), "required with dose_grid"))?;
                build_full_design(k, grid, hd, n).map_err(with_key)
            }
            _ => Err(Error::config(
                key.to_string(),
                "give exactly one of preset, low_doses or dose_grid",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub intercept: f64,
    pub slope: f64,
}

/// Either explicit curves on dose (mg) or parallel curves through given
/// responses at a reference dose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<Vec<CurveSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub common_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_dose: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responses: Option<Vec<f64>>,
}

impl TruthSpec {
    pub fn to_truth(&self) -> Result<TrueCurveSet> {
        match (&self.curves, self.common_slope, self.reference_dose, &self.responses) {
            (Some(c), None, None, None) => Ok(TrueCurveSet {
                curves: c
                    .iter()
                    .map(|c| LogisticCurve::new(c.intercept, c.slope, CovariateTransform::Identity))
                    .collect(),
            }),
            (None, Some(slope), Some(dose), Some(resp)) => {
                if let Some(i) = resp.iter().position(|p| !(*p > 0.0 && *p < 1.0)) {
                    return Err(Error::config(format!("optimize.truth.responses[{i}]"), "must lie in (0, 1)"));
                }
                Ok(TrueCurveSet::common_slope(slope, dose, resp))
            }
            _ => Err(Error::config(
                "optimize.truth",
                "give either curves, or common_slope with reference_dose and responses",
            )),
        }
    }
}

fn default_replicates() -> usize {
    10_000
}

fn default_levels() -> Vec<f64> {
    vec![0.80, 0.90, 0.95]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeParams {
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_levels")]
    pub ci_levels: Vec<f64>,
    /// The five built-in schemes when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schemes: Vec<SchemeSpec>,
    /// The shipped default truth set when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthSpec>,
    #[serde(default = "default_true")]
    pub parallel: bool,
}

impl OptimizeParams {
    pub fn designs(&self) -> Result<Vec<(String, FactorialDesign)>> {
        if self.schemes.is_empty() {
            return Ok(crate::factorial::all_schemes());
        }
        self.schemes
            .iter()
            .enumerate()
            .map(|(i, s)| Ok((s.name.clone(), s.to_design(&format!("optimize.schemes[{i}]"))?)))
            .collect()
    }

    pub fn truth(&self) -> Result<TrueCurveSet> {
        self.truth.as_ref().map_or_else(|| Ok(TrueCurveSet::default_set()), TruthSpec::to_truth)
    }
}

fn default_address() -> String {
    "127.0.0.1:8080".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeParams {
    #[serde(default = "default_address")]
    pub address: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub step: Step,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escalation: Option<EscalationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decide: Option<DecideParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<EscalationSimParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serve: Option<ServeParams>,
}

fn required<'a, T>(block: &'a Option<T>, key: &str, step: Step) -> Result<&'a T> {
    block
        .as_ref()
        .ok_or_else(|| Error::config(key, format!("required for step {}", step.name())))
}

fn probability(key: &str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::config(key, "must lie in (0, 1)"));
    }
    Ok(())
}

fn escalation_checked(cfg: &RunConfig) -> Result<&EscalationConfig> {
    let e = required(&cfg.escalation, "escalation", cfg.step)?;
    e.validate().map_err(|err| match err {
        Error::Config { key, constraint } => Error::config(format!("escalation.{key}"), constraint),
        other => other,
    })?;
    Ok(e)
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = Self::parse_unchecked(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Strict parse without the cross-field checks, for callers that apply
    /// overrides before calling [`validate`](Self::validate).
    pub fn parse_unchecked(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("document", e.message().trim_end().to_string()))
    }

    /// As [`parse`](Self::parse), additionally requiring `step`.
    pub fn parse_for(text: &str, step: Step) -> Result<Self> {
        let cfg = Self::parse(text)?;
        if cfg.step != step {
            return Err(Error::config("step", format!("expected {}, found {}", step.name(), cfg.step.name())));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.step.needs_seed() && self.seed.is_none() {
            return Err(Error::config("seed", format!("required for step {}", self.step.name())));
        }
        match self.step {
            Step::EscalateDecide => {
                let e = escalation_checked(self)?;
                if let Some(d) = &self.decide {
                    if self.paths.input.is_some() {
                        return Err(Error::config("decide.history", "give either decide.history or paths.input"));
                    }
                    d.history.validate(e)?;
                } else if self.paths.input.is_none() {
                    return Err(Error::config("decide.history", "required unless paths.input names a history file"));
                }
            }
            Step::EscalateTable => {
                escalation_checked(self)?;
                if let Some(t) = &self.table {
                    if t.n_max == 0 || t.n_max > crate::api::MAX_TABLE_N {
                        return Err(Error::config(
                            "table.n_max",
                            format!("must lie in 1..={}", crate::api::MAX_TABLE_N),
                        ));
                    }
                }
            }
            Step::EscalateSimulate => {
                let e = escalation_checked(self)?;
                let s = required(&self.simulate, "simulate", self.step)?;
                if s.true_tox.len() != e.dose_count() {
                    return Err(Error::config(
                        "simulate.true_tox",
                        format!("must have one rate per provisional dose ({} expected)", e.dose_count()),
                    ));
                }
                if let Some(i) = s.true_tox.iter().position(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::config(format!("simulate.true_tox[{i}]"), "must lie in [0, 1]"));
                }
                if s.trials == 0 {
                    return Err(Error::config("simulate.trials", "must be at least 1"));
                }
            }
            Step::RdeCalibrate => {
                let c = required(&self.calibration, "calibration", self.step)?;
                if !(0.0..1.0).contains(&c.efficacy_floor) {
                    return Err(Error::config("calibration.efficacy_floor", "must lie in [0, 1)"));
                }
                if !(c.toxicity_ceiling > 0.0 && c.toxicity_ceiling <= 1.0) {
                    return Err(Error::config("calibration.toxicity_ceiling", "must lie in (0, 1]"));
                }
                probability("calibration.level", c.level)?;
                if !(c.mtd_or_mad > 0.0) {
                    return Err(Error::config("calibration.mtd_or_mad", "must be positive"));
                }
                if c.count < 3 {
                    return Err(Error::config("calibration.count", "must be at least 3"));
                }
                if !(c.granularity > 0.0) {
                    return Err(Error::config("calibration.granularity", "must be positive"));
                }
                if let (Some(lo), Some(hi)) = (c.search_min, c.search_max) {
                    if !(lo > 0.0 && lo < hi) {
                        return Err(Error::config("calibration.search_min", "need 0 < search_min < search_max"));
                    }
                }
                match (&c.observations, &self.paths.input) {
                    (Some(_), Some(_)) => {
                        return Err(Error::config(
                            "calibration.observations",
                            "give either calibration.observations or paths.input",
                        ))
                    }
                    (None, None) => {
                        return Err(Error::config(
                            "calibration.observations",
                            "required unless paths.input names an exposure CSV",
                        ))
                    }
                    (Some(obs), None) => {
                        for (i, o) in obs.iter().enumerate() {
                            o.validate().map_err(|e| {
                                Error::config(format!("calibration.observations[{i}]"), e.to_string())
                            })?;
                        }
                    }
                    (None, Some(_)) => {}
                }
            }
            Step::OptimizeSimulate => {
                let o = required(&self.optimize, "optimize", self.step)?;
                if o.replicates == 0 {
                    return Err(Error::config("optimize.replicates", "must be at least 1"));
                }
                if o.ci_levels.is_empty() {
                    return Err(Error::config("optimize.ci_levels", "must not be empty"));
                }
                for (i, &l) in o.ci_levels.iter().enumerate() {
                    probability(&format!("optimize.ci_levels[{i}]"), l)?;
                }
                let truth = o.truth()?;
                for (i, (_, d)) in o.designs()?.iter().enumerate() {
                    truth.validate(d.cohort_count, d.high_dose).map_err(|e| match e {
                        Error::Config { key, constraint } => {
                            Error::config(format!("optimize.{key}"), format!("{constraint} (scheme {})", i + 1))
                        }
                        other => other,
                    })?;
                }
            }
            Step::Serve => {}
        }
        Ok(())
    }

    /// Every input file named by the config must exist.
    pub fn check_inputs_exist(&self) -> Result<()> {
        if let Some(p) = &self.paths.input {
            if !p.is_file() {
                return Err(Error::config("paths.input", format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Resolves relative paths against `base`.
    pub fn relative_to(mut self, base: &Path) -> Self {
        for p in [&mut self.paths.input, &mut self.paths.output, &mut self.paths.replicates]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        self
    }

    /// SHA-256 of the canonical JSON form (sorted keys, defaults filled in).
    /// Output locations and the parallelism switch are left out: they do
    /// not change results.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.paths.output = None;
        c.paths.replicates = None;
        if let Some(s) = &mut c.simulate {
            s.parallel = true;
        }
        if let Some(o) = &mut c.optimize {
            o.parallel = true;
        }
        digest_value(&c)
    }
}

/// SHA-256 hex digest of any serializable value's canonical JSON.
pub fn digest_value<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_value(value).expect("config serializes").to_string();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}
