//! CSV inputs and per-replicate dumps. Every file has a header row.
//!
//! Exposure data: `dose,exposure,efficacy_responders,efficacy_total,toxicity_events,toxicity_total`
//! with empty cells for a missing endpoint. Cohort data: `cohort,dose,responders,total`
//! with cohorts numbered from 1.

use std::io::{Read, Write};

use serde::Deserialize;

use crate::calibration::{BinaryCount, ExposureObservation};
use crate::error::{Error, Result};
use crate::factorial::{ArmData, CohortData, ReplicateResult};

pub const EXPOSURE_COLUMNS: [&str; 6] = [
    "dose",
    "exposure",
    "efficacy_responders",
    "efficacy_total",
    "toxicity_events",
    "toxicity_total",
];
pub const COHORT_COLUMNS: [&str; 4] = ["cohort", "dose", "responders", "total"];
pub const REPLICATE_COLUMNS: [&str; 7] = [
    "scheme",
    "replicate",
    "sensitive_cohort",
    "fallback",
    "ci_level",
    "chosen_dose",
    "relative_rr_pct",
];

fn csv_err(e: csv::Error) -> Error {
    Error::arg(format!("csv: {e}"))
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let headers = r.headers().map_err(csv_err)?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::arg(format!(
            "header must be {:?}, found {:?}",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

#[derive(Deserialize)]
struct ExposureRow {
    dose: f64,
    exposure: f64,
    efficacy_responders: Option<u32>,
    efficacy_total: Option<u32>,
    toxicity_events: Option<u32>,
    toxicity_total: Option<u32>,
}

fn pair(line: usize, what: &str, events: Option<u32>, total: Option<u32>) -> Result<Option<BinaryCount>> {
    match (events, total) {
        (Some(events), Some(total)) => Ok(Some(BinaryCount { events, total })),
        (None, None) => Ok(None),
        _ => Err(Error::arg(format!("line {line}: {what} needs both a count and a total"))),
    }
}

pub fn read_exposure_csv<R: Read>(reader: R) -> Result<Vec<ExposureObservation>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut r, &EXPOSURE_COLUMNS)?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<ExposureRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(csv_err)?;
        let o = ExposureObservation {
            dose: row.dose,
            exposure: row.exposure,
            efficacy: pair(line, "efficacy", row.efficacy_responders, row.efficacy_total)?,
            toxicity: pair(line, "toxicity", row.toxicity_events, row.toxicity_total)?,
        };
        o.validate().map_err(|e| Error::arg(format!("line {line}: {e}")))?;
        out.push(o);
    }
    Ok(out)
}

pub fn write_exposure_csv<W: Write>(writer: W, data: &[ExposureObservation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(EXPOSURE_COLUMNS).map_err(csv_err)?;
    let cell = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
    for o in data {
        w.write_record([
            o.dose.to_string(),
            o.exposure.to_string(),
            cell(o.efficacy.map(|c| c.events)),
            cell(o.efficacy.map(|c| c.total)),
            cell(o.toxicity.map(|c| c.events)),
            cell(o.toxicity.map(|c| c.total)),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct CohortRow {
    cohort: usize,
    dose: f64,
    responders: u32,
    total: u32,
}

pub fn read_cohort_csv<R: Read>(reader: R) -> Result<CohortData> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(&mut r, &COHORT_COLUMNS)?;
    let mut cohorts: Vec<Vec<ArmData>> = Vec::new();
    for (i, row) in r.deserialize::<CohortRow>().enumerate() {
        let row = row.map_err(csv_err)?;
        if row.cohort == 0 {
            return Err(Error::arg(format!("line {}: cohorts are numbered from 1", i + 2)));
        }
        if cohorts.len() < row.cohort {
            cohorts.resize_with(row.cohort, Vec::new);
        }
        cohorts[row.cohort - 1].push(ArmData {
            dose: row.dose,
            responders: row.responders,
            total: row.total,
        });
    }
    let data = CohortData { cohorts };
    data.validate()?;
    if let Some(i) = data.cohorts.iter().position(Vec::is_empty) {
        return Err(Error::arg(format!("cohort {} has no arms", i + 1)));
    }
    Ok(data)
}

pub fn write_cohort_csv<W: Write>(writer: W, data: &CohortData) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COHORT_COLUMNS).map_err(csv_err)?;
    for (c, arms) in data.cohorts.iter().enumerate() {
        for a in arms {
            w.write_record([(c + 1).to_string(), a.dose.to_string(), a.responders.to_string(), a.total.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per (scheme, replicate, level). Doses 1 decimal, percents 1 decimal.
pub fn write_replicates_csv<W: Write>(writer: W, schemes: &[(String, Vec<ReplicateResult>)], ci_levels: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPLICATE_COLUMNS).map_err(csv_err)?;
    for (name, results) in schemes {
        for r in results {
            for (k, l) in ci_levels.iter().enumerate() {
                w.write_record([
                    name.clone(),
                    r.replicate.to_string(),
                    (r.sensitive_index + 1).to_string(),
                    r.fallback.to_string(),
                    format!("{l:.2}"),
                    format!("{:.1}", r.doses[k]),
                    format!("{:.1}", r.relative_rr[k]),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
