//! Command-line runner and HTTP service over the `dosefind` library.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use axum::body::Bytes;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clap::{Args, Parser, Subcommand};
use tower_http::cors::CorsLayer;

use dosefind::api::{self, ApiError};
use dosefind::calibration::{
    derive_exposure_window, fit_dose_exposure, fit_exposure_models, propose_rdes, FitStatus, WindowCriteria,
    WindowOutcome,
};
use dosefind::config::{RunConfig, Step};
use dosefind::escalation::{simulate_many, simulate_many_par, TrialHistory};
use dosefind::factorial::{simulate_replicates, simulate_replicates_par, summarize_replicates, SchemeResult};
use dosefind::io::{read_exposure_csv, write_replicates_csv};
use dosefind::report::{EscalationSimReport, Format, Metadata, Payload, RdeReport, ResultBundle};

#[derive(Debug, Parser)]
#[command(name = "dosefind", version, about = "Dose escalation, RDE calibration and factorial dose optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Seed; overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// table, csv or json.
    #[arg(long, default_value = "table")]
    pub format: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Step 1: hybrid dose escalation.
    Escalate {
        #[command(subcommand)]
        action: EscalateAction,
    },
    /// Step 2: RDE calibration.
    Rde {
        #[command(subcommand)]
        action: RdeAction,
    },
    /// Step 3: factorial dose optimization.
    Optimize {
        #[command(subcommand)]
        action: OptimizeAction,
    },
    /// Stateless HTTP decision service.
    Serve {
        #[command(flatten)]
        common: Common,
        /// Bind address; overrides `serve.address`.
        #[arg(long)]
        address: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum EscalateAction {
    /// Stage 1-3 decision for the current trial state.
    Decide(Common),
    /// Stage-1 decision table.
    Table(Common),
    /// Whole-trial simulation under known DLT rates.
    Simulate(Common),
}

#[derive(Debug, Subcommand)]
pub enum RdeAction {
    /// Exposure window and recommended doses for expansion.
    Calibrate(Common),
}

#[derive(Debug, Subcommand)]
pub enum OptimizeAction {
    /// Operating characteristics of one or more factorial schemes.
    Simulate(Common),
}

impl Command {
    pub fn step_and_common(&self) -> (Step, &Common) {
        match self {
            Command::Escalate { action } => match action {
                EscalateAction::Decide(c) => (Step::EscalateDecide, c),
                EscalateAction::Table(c) => (Step::EscalateTable, c),
                EscalateAction::Simulate(c) => (Step::EscalateSimulate, c),
            },
            Command::Rde {
                action: RdeAction::Calibrate(c),
            } => (Step::RdeCalibrate, c),
            Command::Optimize {
                action: OptimizeAction::Simulate(c),
            } => (Step::OptimizeSimulate, c),
            Command::Serve { common, .. } => (Step::Serve, common),
        }
    }
}

/// Reads, overrides and validates the run configuration for `step`.
pub fn load_config(path: &Path, step: Step, seed: Option<u64>) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = RunConfig::parse_unchecked(&text)?;
    if cfg.step != step {
        bail!("step: config is for {}, not {}", cfg.step.name(), step.name());
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let base = path.parent().unwrap_or(Path::new("."));
    let cfg = cfg.relative_to(base);
    cfg.check_inputs_exist()?;
    Ok(cfg)
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Runs a non-serve step. `digest` identifies the configuration as written,
/// before path resolution.
pub fn run_step(cfg: &RunConfig, digest: String) -> anyhow::Result<ResultBundle> {
    let mut metadata = Metadata::new(digest, cfg.seed);
    metadata.timestamp = Some(timestamp());
    let mut diagnostics = Vec::new();
    let payload = match cfg.step {
        Step::EscalateDecide => {
            let e = cfg.escalation.as_ref().expect("validated");
            let history = match (&cfg.decide, &cfg.paths.input) {
                (Some(d), _) => d.history.clone(),
                (None, Some(p)) => {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    let h: TrialHistory =
                        serde_json::from_str(&text).with_context(|| format!("parsing history {}", p.display()))?;
                    h
                }
                (None, None) => unreachable!("validated"),
            };
            let p = api::decision_payload(e, &history)?;
            if p.stage2.fallback {
                diagnostics.push("stage 2 dose-toxicity fit unavailable; used the current dose's posterior mean".into());
            }
            Payload::Decision(p)
        }
        Step::EscalateTable => {
            let e = cfg.escalation.as_ref().expect("validated");
            let n_max = cfg.table.as_ref().map_or(12, |t| t.n_max);
            Payload::DecisionTable(api::table_payload(e, n_max)?)
        }
        Step::EscalateSimulate => {
            let e = cfg.escalation.as_ref().expect("validated");
            let s = cfg.simulate.as_ref().expect("validated");
            let seed = cfg.seed.expect("validated");
            let summary = if s.parallel {
                simulate_many_par(&s.true_tox, e, seed, s.trials)?
            } else {
                simulate_many(&s.true_tox, e, seed, s.trials)?
            };
            Payload::EscalationSimulation(EscalationSimReport {
                doses: e.provisional_doses.clone(),
                true_tox: s.true_tox.clone(),
                delta2: e.delta2(),
                overdose_control: e.overdose_control,
                summary,
            })
        }
        Step::RdeCalibrate => {
            let c = cfg.calibration.as_ref().expect("validated");
            let data = match (&c.observations, &cfg.paths.input) {
                (Some(obs), _) => obs.clone(),
                (None, Some(p)) => {
                    let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
                    read_exposure_csv(f).with_context(|| format!("reading {}", p.display()))?
                }
                (None, None) => unreachable!("validated"),
            };
            let fits = fit_exposure_models(&data)?;
            if fits.toxicity_status == FitStatus::Uninformative {
                diagnostics.push("toxicity data carry no exposure signal; ceiling not applied".into());
            }
            let lo = data.iter().map(|o| o.exposure).fold(f64::INFINITY, f64::min);
            let hi = data.iter().map(|o| o.exposure).fold(f64::NEG_INFINITY, f64::max);
            let criteria = WindowCriteria {
                efficacy_floor: c.efficacy_floor,
                toxicity_ceiling: c.toxicity_ceiling,
                level: c.level,
                search_min: c.search_min.unwrap_or(lo),
                search_max: c.search_max.unwrap_or(hi),
            };
            let window = derive_exposure_window(&fits.efficacy, &fits.toxicity, &criteria)?;
            let model = fit_dose_exposure(&data)?;
            let rdes = match &window {
                WindowOutcome::Feasible(w) => match propose_rdes(w, &model, c.mtd_or_mad, &c.rde_options()) {
                    Ok(set) => Some(set),
                    Err(dosefind::Error::Infeasible(reason)) => {
                        diagnostics.push(format!("no RDEs: {reason}"));
                        None
                    }
                    Err(e) => return Err(e.into()),
                },
                WindowOutcome::Infeasible { reason } => {
                    diagnostics.push(format!("no RDEs: {reason}"));
                    None
                }
            };
            Payload::Rde(RdeReport::new(&fits, window, model, c.mtd_or_mad, rdes))
        }
        Step::OptimizeSimulate => {
            let o = cfg.optimize.as_ref().expect("validated");
            let seed = cfg.seed.expect("validated");
            let truth = o.truth()?;
            let mut raw = Vec::new();
            let mut rows = Vec::new();
            for (name, design) in o.designs()? {
                let results = if o.parallel {
                    simulate_replicates_par(&design, &truth, o.replicates, seed, &o.ci_levels)?
                } else {
                    simulate_replicates(&design, &truth, o.replicates, seed, &o.ci_levels)?
                };
                let characteristics = summarize_replicates(&results, &o.ci_levels, seed);
                let fallbacks = results.iter().filter(|r| r.fallback).count();
                if fallbacks > 0 {
                    diagnostics.push(format!(
                        "scheme {name}: fit fallback to the high dose in {fallbacks} of {} replicates",
                        results.len()
                    ));
                }
                rows.push(SchemeResult {
                    scheme: name.clone(),
                    characteristics,
                });
                raw.push((name, results));
            }
            if let Some(p) = &cfg.paths.replicates {
                let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
                write_replicates_csv(std::io::BufWriter::new(f), &raw, &o.ci_levels)?;
            }
            Payload::OperatingCharacteristics(rows)
        }
        Step::Serve => bail!("serve is not a batch step"),
    };
    Ok(ResultBundle {
        metadata,
        payload,
        diagnostics,
    })
}

fn respond(result: Result<ResultBundle, ApiError>) -> Response {
    match result {
        Ok(bundle) => (StatusCode::OK, Json(bundle)).into_response(),
        Err(e) => {
            let status = StatusCode::from_u16(e.status).unwrap_or(StatusCode::UNPROCESSABLE_ENTITY);
            (status, Json(e)).into_response()
        }
    }
}

async fn decision(body: Bytes) -> Response {
    respond(api::handle_decision(&body))
}

async fn decision_table(body: Bytes) -> Response {
    respond(api::handle_table(&body))
}

async fn mtd(body: Bytes) -> Response {
    respond(api::handle_mtd(&body))
}

async fn health() -> Json<api::Health> {
    Json(api::health())
}

pub fn router() -> Router {
    Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/decision", post(decision))
        .route("/api/v1/decision-table", post(decision_table))
        .route("/api/v1/mtd", post(mtd))
        .layer(CorsLayer::permissive())
}

pub async fn serve(address: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(address)
        .await
        .with_context(|| format!("binding {address}"))?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router()).await?;
    Ok(())
}

/// Entry point behind the binary.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    let (step, common) = cli.command.step_and_common();
    let format: Format = common.format.parse()?;
    let cfg = load_config(&common.config, step, common.seed)?;

    if let Command::Serve { address, .. } = &cli.command {
        let address = address
            .clone()
            .or_else(|| cfg.serve.as_ref().map(|s| s.address.clone()))
            .unwrap_or_else(|| "127.0.0.1:8080".into());
        let rt = tokio::runtime::Runtime::new()?;
        return rt.block_on(serve(&address));
    }

    // The digest covers the document as written, so it does not depend on
    // where the config file lives.
    let text = fs::read_to_string(&common.config)?;
    let mut as_written = RunConfig::parse_unchecked(&text)?;
    if common.seed.is_some() {
        as_written.seed = common.seed;
    }
    let bundle = run_step(&cfg, as_written.digest())?;
    let rendered = bundle.emit(format);
    match common.out.as_ref().or(cfg.paths.output.as_ref()) {
        Some(p) => fs::write(p, rendered).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{rendered}"),
    }
    Ok(())
}
