//! Stateless request handlers behind the HTTP service. Every request carries
//! the full design and trial state; nothing is kept between calls.

use serde::{Deserialize, Serialize};

use crate::config::digest_value;
use crate::error::{Error, Result};
use crate::escalation::{
    decide, decision_table, next_dose, select_mtd, Decision, DecisionTable, EscalationConfig, MtdSelection, NextDose,
    Stage1Outcome, Stage2Outcome, TrialHistory,
};
use crate::report::{Metadata, Payload, ResultBundle};

/// Largest decision table served.
pub const MAX_TABLE_N: u32 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub config: EscalationConfig,
    pub history: TrialHistory,
}

fn default_n_max() -> u32 {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRequest {
    pub config: EscalationConfig,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtdRequest {
    pub config: EscalationConfig,
    pub history: TrialHistory,
}

/// All three stage calls at the current dose, with the numbers behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPayload {
    pub dose_index: usize,
    pub dose: f64,
    pub treated: u32,
    pub dlt_count: u32,
    pub delta1: f64,
    pub delta2: f64,
    pub gamma: f64,
    pub exclusion_threshold: f64,
    pub overdose_control: bool,
    /// Posterior probability of the overdosing interval.
    pub p_overdose: f64,
    pub stage1: Stage1Outcome,
    pub stage2: Stage2Outcome,
    pub stage3: Decision,
    /// Where the combined decision sends the next cohort.
    pub next: NextDose,
}

fn prefixed(prefix: &str, e: Error) -> Error {
    match e {
        Error::Config { key, constraint } => Error::config(format!("{prefix}.{key}"), constraint),
        other => other,
    }
}

fn checked(config: &EscalationConfig, history: &TrialHistory) -> Result<()> {
    config.validate().map_err(|e| prefixed("config", e))?;
    history.validate(config)
}

pub fn decision_payload(config: &EscalationConfig, history: &TrialHistory) -> Result<DecisionPayload> {
    checked(config, history)?;
    if history.is_excluded(history.current_dose_index) {
        return Err(Error::config(
            "history.current_dose_index",
            "must not point at an excluded dose",
        ));
    }
    let current = history.current();
    if current.treated == 0 {
        return Err(Error::config(
            "history.outcomes",
            format!("no subjects treated at the current dose (index {})", history.current_dose_index),
        ));
    }
    let d = decide(history, config)?;
    let mut after = history.clone();
    let next = next_dose(&mut after, d.combined, config);
    Ok(DecisionPayload {
        dose_index: history.current_dose_index,
        dose: current.dose,
        treated: current.treated,
        dlt_count: current.dlt_count,
        delta1: config.delta1(),
        delta2: config.delta2(),
        gamma: config.gamma,
        exclusion_threshold: config.exclusion_threshold,
        overdose_control: config.overdose_control,
        p_overdose: d.stage1.masses.p_over,
        stage1: d.stage1,
        stage2: d.stage2,
        stage3: d.combined,
        next,
    })
}

pub fn table_payload(config: &EscalationConfig, n_max: u32) -> Result<DecisionTable> {
    config.validate().map_err(|e| prefixed("config", e))?;
    if n_max == 0 || n_max > MAX_TABLE_N {
        return Err(Error::config("n_max", format!("must lie in 1..={MAX_TABLE_N}")));
    }
    decision_table(config, n_max)
}

pub fn mtd_payload(config: &EscalationConfig, history: &TrialHistory) -> Result<MtdSelection> {
    checked(config, history)?;
    Ok(select_mtd(history, config))
}

/// Structured client error: the HTTP status plus a machine-readable kind and,
/// for validation failures, the offending key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub message: String,
}

impl ApiError {
    pub fn malformed(message: impl Into<String>) -> Self {
        Self {
            status: 400,
            error: "malformed_request".into(),
            key: None,
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (error, key, message) = match &e {
            Error::Config { key, constraint } => ("invalid_config", Some(key.clone()), constraint.clone()),
            Error::InvalidArgument(m) => ("invalid_argument", None, m.clone()),
            Error::InsufficientData(m) => ("insufficient_data", None, m.clone()),
            other => ("unprocessable", None, other.to_string()),
        };
        Self {
            status: 422,
            error: error.into(),
            key,
            message,
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(body: &[u8]) -> std::result::Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))
}

fn bundle<R: Serialize>(request: &R, payload: Payload) -> ResultBundle {
    ResultBundle {
        metadata: Metadata::new(digest_value(request), None),
        payload,
        diagnostics: Vec::new(),
    }
}

pub fn handle_decision(body: &[u8]) -> std::result::Result<ResultBundle, ApiError> {
    let req: DecisionRequest = parse(body)?;
    let payload = decision_payload(&req.config, &req.history)?;
    let mut b = bundle(&req, Payload::Decision(payload));
    if let Payload::Decision(p) = &b.payload {
        if p.stage2.fallback {
            b.diagnostics
                .push("stage 2 dose-toxicity fit unavailable; used the current dose's posterior mean".into());
        }
    }
    Ok(b)
}

pub fn handle_table(body: &[u8]) -> std::result::Result<ResultBundle, ApiError> {
    let req: TableRequest = parse(body)?;
    let table = table_payload(&req.config, req.n_max)?;
    Ok(bundle(&req, Payload::DecisionTable(table)))
}

pub fn handle_mtd(body: &[u8]) -> std::result::Result<ResultBundle, ApiError> {
    let req: MtdRequest = parse(body)?;
    let sel = mtd_payload(&req.config, &req.history)?;
    Ok(bundle(&req, Payload::Mtd(sel)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

pub fn health() -> Health {
    Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    }
}
