//! Result bundles and their serializations.
//!
//! CSV and table output format doses with 1 decimal, probabilities with 2 and
//! percentages with 1. Every CSV starts with a `#` line carrying the tool
//! version, config digest and seed, and no timestamp, so reruns are
//! byte-identical.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::api::DecisionPayload;
use crate::calibration::{DoseExposureModel, ExposureFits, FitStatus, RdeSet, WindowOutcome};
use crate::error::{Error, Result};
use crate::escalation::{DecisionTable, EscalationSummary, MtdSelection, NextDose};
use crate::factorial::SchemeResult;
use crate::stats::FitResult;

pub const TOOL: &str = "dosefind";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Wall-clock time of the run; never part of CSV output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl Metadata {
    pub fn new(config_digest: String, seed: Option<u64>) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_digest,
            seed,
            timestamp: None,
        }
    }
}

/// Coefficients of a fitted curve with standard errors when available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub intercept: f64,
    pub slope: f64,
    pub se_intercept: Option<f64>,
    pub se_slope: Option<f64>,
    pub converged: bool,
    pub status: FitStatus,
}

impl FitSummary {
    pub fn new(fit: &FitResult, status: FitStatus) -> Self {
        let se = |v: f64| (v.is_finite() && v >= 0.0).then(|| v.sqrt());
        Self {
            intercept: fit.curve.intercept,
            slope: fit.curve.slope,
            se_intercept: se(fit.covariance[0][0]),
            se_slope: se(fit.covariance[1][1]),
            converged: fit.converged,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdeReport {
    pub efficacy: FitSummary,
    pub toxicity: FitSummary,
    pub window: WindowOutcome,
    pub dose_exposure: DoseExposureModel,
    pub mtd_or_mad: f64,
    /// Absent when the window is infeasible.
    pub rdes: Option<RdeSet>,
}

impl RdeReport {
    pub fn new(
        fits: &ExposureFits,
        window: WindowOutcome,
        dose_exposure: DoseExposureModel,
        mtd_or_mad: f64,
        rdes: Option<RdeSet>,
    ) -> Self {
        Self {
            efficacy: FitSummary::new(&fits.efficacy, fits.efficacy_status),
            toxicity: FitSummary::new(&fits.toxicity, fits.toxicity_status),
            window,
            dose_exposure,
            mtd_or_mad,
            rdes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscalationSimReport {
    pub doses: Vec<f64>,
    pub true_tox: Vec<f64>,
    pub delta2: f64,
    pub overdose_control: bool,
    pub summary: EscalationSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Payload {
    Decision(DecisionPayload),
    DecisionTable(DecisionTable),
    Mtd(MtdSelection),
    EscalationSimulation(EscalationSimReport),
    Rde(RdeReport),
    OperatingCharacteristics(Vec<SchemeResult>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub metadata: Metadata,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" | "json-like" => Ok(Format::Json),
            other => Err(Error::arg(format!("unknown format {other:?} (table, csv or json)"))),
        }
    }
}

fn dose(x: f64) -> String {
    format!("{x:.1}")
}

fn prob(x: f64) -> String {
    format!("{x:.2}")
}

fn pct(x: f64) -> String {
    format!("{x:.1}")
}

fn opt(x: Option<f64>, f: fn(f64) -> String) -> String {
    x.map(f).unwrap_or_default()
}

fn next_label(n: NextDose) -> String {
    match n {
        NextDose::Dose(i) => i.to_string(),
        NextDose::Complete => "complete".into(),
    }
}

impl ResultBundle {
    pub fn new(metadata: Metadata, payload: Payload) -> Self {
        Self {
            metadata,
            payload,
            diagnostics: Vec::new(),
        }
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
                s.push('\n');
                s
            }
            Format::Csv => self.to_csv(),
            Format::Table => self.to_table(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::arg(format!("not a result bundle: {e}")))
    }

    fn header_line(&self) -> String {
        let m = &self.metadata;
        let mut s = format!("# {} {} config_digest={}", m.tool, m.version, m.config_digest);
        if let Some(seed) = m.seed {
            let _ = write!(s, " seed={seed}");
        }
        s
    }

    fn to_csv(&self) -> String {
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut notes: Vec<String> = Vec::new();
        match &self.payload {
            Payload::Decision(p) => {
                rows.push(
                    [
                        "dose_index", "dose", "treated", "dlt_count", "p_under", "p_target", "p_over", "upm_under",
                        "upm_target", "upm_over", "stage1", "stage2", "stage3", "p_current", "p_next",
                        "stage2_fallback", "next_dose",
                    ]
                    .map(String::from)
                    .to_vec(),
                );
                let m = &p.stage1.masses;
                rows.push(vec![
                    p.dose_index.to_string(),
                    dose(p.dose),
                    p.treated.to_string(),
                    p.dlt_count.to_string(),
                    prob(m.p_under),
                    prob(m.p_target),
                    prob(m.p_over),
                    prob(m.upm_under),
                    prob(m.upm_target),
                    prob(m.upm_over),
                    p.stage1.decision.to_string(),
                    p.stage2.decision.to_string(),
                    p.stage3.to_string(),
                    prob(p.stage2.p_current),
                    opt(p.stage2.p_next, prob),
                    p.stage2.fallback.to_string(),
                    next_label(p.next),
                ]);
            }
            Payload::DecisionTable(t) => {
                rows.push(vec!["treated".into(), "dlt_count".into(), "decision".into()]);
                for (i, row) in t.rows.iter().enumerate() {
                    for (x, d) in row.iter().enumerate() {
                        rows.push(vec![(i + 1).to_string(), x.to_string(), d.label().into()]);
                    }
                }
            }
            Payload::Mtd(m) => {
                rows.push(
                    ["dose_index", "dose", "treated", "dlt_count", "excluded", "raw_rate", "smoothed_rate", "selected"]
                        .map(String::from)
                        .to_vec(),
                );
                for r in &m.rows {
                    rows.push(vec![
                        r.index.to_string(),
                        dose(r.dose),
                        r.treated.to_string(),
                        r.dlt_count.to_string(),
                        r.excluded.to_string(),
                        opt(r.raw_rate, prob),
                        opt(r.smoothed_rate, prob),
                        (m.dose_index == Some(r.index)).to_string(),
                    ]);
                }
            }
            Payload::EscalationSimulation(s) => {
                notes.push(format!(
                    "trials={} no_mtd={} mean_subjects={:.2} mean_overdose_fraction={} overdose_control={}",
                    s.summary.trials,
                    s.summary.no_mtd,
                    s.summary.mean_subjects,
                    prob(s.summary.mean_overdose_fraction),
                    s.overdose_control
                ));
                rows.push(
                    ["dose_index", "dose", "true_dlt_rate", "selected", "selection_rate", "mean_treated"]
                        .map(String::from)
                        .to_vec(),
                );
                for (i, d) in s.doses.iter().enumerate() {
                    rows.push(vec![
                        i.to_string(),
                        dose(*d),
                        prob(s.true_tox[i]),
                        s.summary.mtd_counts[i].to_string(),
                        prob(s.summary.selection_rate(i)),
                        format!("{:.2}", s.summary.mean_treated_per_dose[i]),
                    ]);
                }
            }
            Payload::Rde(r) => {
                match &r.window {
                    WindowOutcome::Feasible(w) => notes.push(format!(
                        "window lower_exposure={:.4} upper_exposure={:.4} ceiling_dropped={}",
                        w.lower_exposure, w.upper_exposure, w.ceiling_dropped
                    )),
                    WindowOutcome::Infeasible { reason } => notes.push(format!("window infeasible: {reason}")),
                }
                if let Some(note) = r.rdes.as_ref().and_then(|s| s.note.as_ref()) {
                    notes.push(note.clone());
                }
                rows.push(vec!["dose".into(), "tag".into(), "predicted_exposure".into()]);
                for d in r.rdes.iter().flat_map(|s| &s.doses) {
                    let tag = serde_json::to_value(d.tag).unwrap();
                    rows.push(vec![
                        dose(d.dose),
                        tag.as_str().unwrap_or_default().into(),
                        format!("{:.4}", r.dose_exposure.exposure(d.dose)),
                    ]);
                }
            }
            Payload::OperatingCharacteristics(schemes) => {
                rows.push(
                    [
                        "scheme", "p_select", "ci_level", "dose_mean", "dose_median", "dose_sd", "rr_mean",
                        "rr_median", "rr_sd", "pct_rr_below_70", "fallback_rate",
                    ]
                    .map(String::from)
                    .to_vec(),
                );
                for s in schemes {
                    let oc = &s.characteristics;
                    for l in &oc.levels {
                        rows.push(vec![
                            s.scheme.clone(),
                            prob(oc.p_select),
                            prob(l.ci_level),
                            dose(l.dose_mean),
                            dose(l.dose_median),
                            dose(l.dose_sd),
                            pct(l.rr_mean),
                            pct(l.rr_median),
                            pct(l.rr_sd),
                            pct(l.pct_rr_below_70),
                            prob(oc.fallback_rate),
                        ]);
                    }
                }
            }
        }

        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        for r in &rows {
            w.write_record(r).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        let mut out = self.header_line();
        out.push('\n');
        for n in notes {
            let _ = writeln!(out, "# {n}");
        }
        out.push_str(&body);
        out
    }

    fn to_table(&self) -> String {
        let mut out = String::new();
        let m = &self.metadata;
        let _ = writeln!(out, "{} {}  digest {}", m.tool, m.version, &m.config_digest[..m.config_digest.len().min(12)]);
        if let Some(seed) = m.seed {
            let _ = writeln!(out, "seed {seed}");
        }
        out.push('\n');
        match &self.payload {
            Payload::Decision(p) => {
                let s = &p.stage1.masses;
                let _ = writeln!(out, "current dose {} (index {}): {}/{} DLT", dose(p.dose), p.dose_index, p.dlt_count, p.treated);
                let _ = writeln!(out, "target interval ({}, {}]", prob(p.delta1), prob(p.delta2));
                let _ = writeln!(out, "            under  target    over");
                let _ = writeln!(out, "  P      {:>8} {:>7} {:>7}", prob(s.p_under), prob(s.p_target), prob(s.p_over));
                let _ = writeln!(out, "  UPM    {:>8} {:>7} {:>7}", prob(s.upm_under), prob(s.upm_target), prob(s.upm_over));
                let _ = writeln!(out, "P(overdose) {} vs gamma {}", prob(p.p_overdose), prob(p.gamma));
                let _ = writeln!(out, "stage 1  {}", p.stage1.decision);
                let _ = writeln!(
                    out,
                    "stage 2  {}  (p current {}{}{})",
                    p.stage2.decision,
                    prob(p.stage2.p_current),
                    p.stage2.p_next.map(|q| format!(", p next {}", prob(q))).unwrap_or_default(),
                    if p.stage2.fallback { ", fallback" } else { "" }
                );
                let _ = writeln!(out, "stage 3  {}", p.stage3);
                let _ = writeln!(out, "next     {}", next_label(p.next));
            }
            Payload::DecisionTable(t) => {
                let _ = writeln!(out, "stage-1 decisions by DLT count (columns) and number treated (rows)");
                let _ = write!(out, "  n |");
                for x in 0..=t.n_max {
                    let _ = write!(out, "{x:>4}");
                }
                out.push('\n');
                for (i, row) in t.rows.iter().enumerate() {
                    let _ = write!(out, "{:>3} |", i + 1);
                    for d in row {
                        let _ = write!(out, "{:>4}", d.label());
                    }
                    out.push('\n');
                }
                let _ = writeln!(out, "\nE escalate, S stay, D de-escalate, DU de-escalate and exclude");
            }
            Payload::Mtd(m) => {
                let _ = writeln!(out, "   dose  n  dlt  excl   raw  smooth");
                for r in &m.rows {
                    let mark = if m.dose_index == Some(r.index) { " <" } else { "" };
                    let _ = writeln!(
                        out,
                        "{:>7} {:>2} {:>4} {:>5} {:>5} {:>7}{mark}",
                        dose(r.dose),
                        r.treated,
                        r.dlt_count,
                        if r.excluded { "yes" } else { "" },
                        opt(r.raw_rate, prob),
                        opt(r.smoothed_rate, prob)
                    );
                }
                let _ = writeln!(out, "MTD: {}", m.dose.map(dose).unwrap_or_else(|| "none".into()));
            }
            Payload::EscalationSimulation(s) => {
                let _ = writeln!(out, "   dose  true  select  mean n");
                for (i, d) in s.doses.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{:>7} {:>5} {:>7} {:>7.2}",
                        dose(*d),
                        prob(s.true_tox[i]),
                        prob(s.summary.selection_rate(i)),
                        s.summary.mean_treated_per_dose[i]
                    );
                }
                let _ = writeln!(out, "trials {}, no MTD {}", s.summary.trials, s.summary.no_mtd);
                let _ = writeln!(out, "mean subjects {:.2}", s.summary.mean_subjects);
                let _ = writeln!(
                    out,
                    "mean fraction treated above {}: {}",
                    prob(s.delta2),
                    prob(s.summary.mean_overdose_fraction)
                );
            }
            Payload::Rde(r) => {
                for (name, f) in [("efficacy", &r.efficacy), ("toxicity", &r.toxicity)] {
                    let _ = writeln!(
                        out,
                        "{name:<9} intercept {:.4} slope {:.4} ({})",
                        f.intercept,
                        f.slope,
                        serde_json::to_value(f.status).unwrap().as_str().unwrap_or_default()
                    );
                }
                let de = &r.dose_exposure;
                let _ = writeln!(
                    out,
                    "ln exposure = {:.4} + {:.4} ln dose (residual sd {:.4})",
                    de.log_intercept, de.log_slope, de.residual_sd
                );
                match &r.window {
                    WindowOutcome::Feasible(w) => {
                        let _ = writeln!(out, "exposure window [{:.4}, {:.4}]", w.lower_exposure, w.upper_exposure);
                        if w.ceiling_dropped {
                            let _ = writeln!(out, "toxicity ceiling dropped: no toxicity signal");
                        }
                    }
                    WindowOutcome::Infeasible { reason } => {
                        let _ = writeln!(out, "exposure window infeasible: {reason}");
                    }
                }
                if let Some(set) = &r.rdes {
                    let _ = writeln!(out, "RDEs (MTD/MAD {}):", dose(r.mtd_or_mad));
                    for d in &set.doses {
                        let tag = serde_json::to_value(d.tag).unwrap();
                        let _ = writeln!(out, "  {:>7}  {}", dose(d.dose), tag.as_str().unwrap_or_default());
                    }
                    if let Some(n) = &set.note {
                        let _ = writeln!(out, "note: {n}");
                    }
                }
            }
            Payload::OperatingCharacteristics(schemes) => {
                let _ = writeln!(
                    out,
                    "{:<8} {:>9} {:>4}  {:>7} {:>7} {:>6}  {:>6} {:>6} {:>5} {:>8}",
                    "scheme", "P(select)", "CI", "dose", "median", "SD", "RR", "median", "SD", "%RR<70"
                );
                for s in schemes {
                    let oc = &s.characteristics;
                    for (k, l) in oc.levels.iter().enumerate() {
                        let _ = writeln!(
                            out,
                            "{:<8} {:>9} {:>3.0}%  {:>7} {:>7} {:>6}  {:>6} {:>6} {:>5} {:>8}",
                            if k == 0 { s.scheme.as_str() } else { "" },
                            if k == 0 { prob(oc.p_select) } else { String::new() },
                            100.0 * l.ci_level,
                            dose(l.dose_mean),
                            dose(l.dose_median),
                            dose(l.dose_sd),
                            pct(l.rr_mean),
                            pct(l.rr_median),
                            pct(l.rr_sd),
                            pct(l.pct_rr_below_70)
                        );
                    }
                }
            }
        }
        if !self.diagnostics.is_empty() {
            let _ = writeln!(out, "\ndiagnostics:");
            for d in &self.diagnostics {
                let _ = writeln!(out, "  {d}");
            }
        }
        out
    }
}
