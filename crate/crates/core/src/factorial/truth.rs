use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{logit, CovariateTransform, LogisticCurve};

/// True dose-response curves, one per cohort, on dose in mg. Cohort 0 is the
/// most sensitive at the high dose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueCurveSet {
    pub curves: Vec<LogisticCurve>,
}

pub const DEFAULT_SLOPE: f64 = 0.006;
pub const DEFAULT_RESPONSE_AT_500: [f64; 5] = [0.65, 0.50, 0.45, 0.40, 0.35];

impl TrueCurveSet {
    /// Curves sharing `slope` (per mg) that pass through `responses` at `dose`.
    pub fn common_slope(slope: f64, dose: f64, responses: &[f64]) -> Self {
        let curves = responses
            .iter()
            .map(|&p| LogisticCurve::new(logit(p) - slope * dose, slope, CovariateTransform::Identity))
            .collect();
        Self { curves }
    }

    /// Shipped default: five parallel curves with responses at 500 mg of
    /// 0.65, 0.50, 0.45, 0.40 and 0.35.
    pub fn default_set() -> Self {
        Self::common_slope(DEFAULT_SLOPE, 500.0, &DEFAULT_RESPONSE_AT_500)
    }

    pub fn response(&self, cohort: usize, dose: f64) -> f64 {
        self.curves[cohort].response(dose)
    }

    pub fn validate(&self, cohort_count: usize, high_dose: f64) -> Result<()> {
        if self.curves.len() != cohort_count {
            return Err(Error::config(
                "truth.curves",
                format!("must have one curve per cohort ({cohort_count} expected)"),
            ));
        }
        for (i, c) in self.curves.iter().enumerate() {
            if c.transform != CovariateTransform::Identity {
                return Err(Error::config(format!("truth.curves[{i}].transform"), "must be identity (dose in mg)"));
            }
            if !(c.intercept.is_finite() && c.slope.is_finite()) {
                return Err(Error::config(format!("truth.curves[{i}]"), "coefficients must be finite"));
            }
        }
        let top = self.response(0, high_dose);
        if let Some(j) = (1..cohort_count).find(|&j| self.response(j, high_dose) > top) {
            return Err(Error::config(
                format!("truth.curves[{j}]"),
                "cohort 1 must have the highest response at the high dose",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_set_shape() {
        let t = TrueCurveSet::default_set();
        t.validate(5, 500.0).unwrap();
        for (j, &p) in DEFAULT_RESPONSE_AT_500.iter().enumerate() {
            assert!((t.response(j, 500.0) - p).abs() < 1e-12);
        }
        // Parallel curves never cross on the design range.
        for d in [250.0, 300.0, 350.0, 400.0, 450.0] {
            for j in 1..5 {
                assert!(t.response(j, d) < t.response(j - 1, d));
            }
        }
    }
}
