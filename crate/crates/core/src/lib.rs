//! Dose finding for oncology trials in three steps: hybrid escalation to an
//! MTD, exposure-response calibration of expansion doses, and a randomized
//! fractional-factorial comparison across tumor cohorts.

pub mod api;
pub mod calibration;
pub mod config;
pub mod error;
pub mod escalation;
pub mod factorial;
pub mod io;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
