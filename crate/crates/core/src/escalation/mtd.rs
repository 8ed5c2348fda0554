//! Terminal MTD estimate: isotonic smoothing of per-dose posterior means,
//! then the dose whose smoothed rate is closest to the target.

use serde::{Deserialize, Serialize};

use super::{EscalationConfig, TrialHistory};
use crate::stats::{beta_posterior, pava_blocks};

const TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtdRow {
    pub index: usize,
    pub dose: f64,
    pub treated: u32,
    pub dlt_count: u32,
    pub excluded: bool,
    /// Posterior-mean DLT rate, when the dose is eligible.
    pub raw_rate: Option<f64>,
    pub smoothed_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtdSelection {
    pub dose_index: Option<usize>,
    pub dose: Option<f64>,
    pub rows: Vec<MtdRow>,
}

/// Index (into `rates`) of the MTD given unsmoothed rates and PAVA weights.
///
/// Ties in distance to `target` go to the lower dose, except inside a pooled
/// block at or below the target, where the highest dose of the block wins.
pub fn select_from_rates(rates: &[f64], weights: &[f64], target: f64) -> crate::Result<(usize, Vec<f64>)> {
    let blocks = pava_blocks(rates, weights)?;
    let mut smoothed = vec![0.0; rates.len()];
    for b in &blocks {
        smoothed[b.start..b.end].fill(b.value);
    }
    let best = smoothed
        .iter()
        .map(|s| (s - target).abs())
        .fold(f64::INFINITY, f64::min);
    let candidates: Vec<usize> = (0..smoothed.len())
        .filter(|&i| (smoothed[i] - target).abs() <= best + TIE)
        .collect();
    let first = candidates[0];
    let last = *candidates.last().unwrap();
    let same_block = blocks.iter().any(|b| b.contains(first) && b.contains(last));
    let chosen = if same_block && smoothed[first] <= target + TIE {
        last
    } else {
        first
    };
    Ok((chosen, smoothed))
}

pub fn select_mtd(history: &TrialHistory, config: &EscalationConfig) -> MtdSelection {
    let min_n = config.min_subjects_for_mtd.max(1);
    let eligible: Vec<usize> = history
        .outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| !o.excluded && o.treated >= min_n)
        .map(|(i, _)| i)
        .collect();

    let mut rows: Vec<MtdRow> = history
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| MtdRow {
            index: i,
            dose: o.dose,
            treated: o.treated,
            dlt_count: o.dlt_count,
            excluded: o.excluded,
            raw_rate: None,
            smoothed_rate: None,
        })
        .collect();

    if eligible.is_empty() {
        return MtdSelection {
            dose_index: None,
            dose: None,
            rows,
        };
    }

    let rates: Vec<f64> = eligible
        .iter()
        .map(|&i| {
            let o = &history.outcomes[i];
            beta_posterior(config.prior, o.dlt_count, o.non_dlt()).mean()
        })
        .collect();
    let weights: Vec<f64> = eligible
        .iter()
        .map(|&i| f64::from(history.outcomes[i].treated))
        .collect();
    let (pick, smoothed) = select_from_rates(&rates, &weights, config.target_dlt_rate)
        .expect("eligible doses have positive weights");

    for (k, &i) in eligible.iter().enumerate() {
        rows[i].raw_rate = Some(rates[k]);
        rows[i].smoothed_rate = Some(smoothed[k]);
    }
    let index = eligible[pick];
    MtdSelection {
        dose_index: Some(index),
        dose: Some(history.outcomes[index].dose),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_wins() {
        let (i, _) = select_from_rates(&[0.10, 0.30, 0.55], &[1.0; 3], 0.30).unwrap();
        assert_eq!(i, 1);
    }

    #[test]
    fn pooled_block_prefers_highest_dose() {
        let (i, smoothed) = select_from_rates(&[0.35, 0.25], &[1.0, 1.0], 0.30).unwrap();
        assert!((smoothed[0] - 0.30).abs() < 1e-15 && (smoothed[1] - 0.30).abs() < 1e-15);
        assert_eq!(i, 1);
    }

    #[test]
    fn symmetric_tie_goes_low() {
        let (i, _) = select_from_rates(&[0.20, 0.40], &[1.0, 1.0], 0.30).unwrap();
        assert_eq!(i, 0);
    }

    #[test]
    fn all_excluded_gives_none() {
        let cfg = EscalationConfig::new(0.3, vec![100.0, 200.0]);
        let mut h = TrialHistory::new(&cfg);
        h.record(3, 3).unwrap();
        h.exclude_from(0);
        let sel = select_mtd(&h, &cfg);
        assert_eq!(sel.dose, None);
    }
}
