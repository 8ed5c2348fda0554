use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignVariant {
    /// Each cohort randomizes between its own low dose and the common high dose.
    Fractional,
    /// Each cohort randomizes across the whole dose grid.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialDesign {
    pub cohort_count: usize,
    pub high_dose: f64,
    /// Per-cohort low dose; empty for the full variant.
    pub low_doses: Vec<f64>,
    pub n_per_arm: u32,
    pub variant: DesignVariant,
    pub full_dose_grid: Option<Vec<f64>>,
}

/// Low doses by cohort for the four fractional schemes, plus the grid of the
/// full-factorial comparator.
pub const SCHEME_LOW_DOSES: [[f64; 5]; 4] = [
    [250.0, 300.0, 350.0, 400.0, 450.0],
    [450.0, 400.0, 350.0, 300.0, 250.0],
    [450.0, 300.0, 250.0, 350.0, 400.0],
    [250.0, 400.0, 450.0, 350.0, 300.0],
];
pub const FULL_GRID: [f64; 6] = [250.0, 300.0, 350.0, 400.0, 450.0, 500.0];
pub const SCHEME_HIGH_DOSE: f64 = 500.0;

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

pub fn build_design(k: usize, high_dose: f64, low_doses: &[f64], n_per_arm: u32) -> Result<FactorialDesign> {
    let design = FactorialDesign {
        cohort_count: k,
        high_dose,
        low_doses: low_doses.to_vec(),
        n_per_arm,
        variant: DesignVariant::Fractional,
        full_dose_grid: None,
    };
    design.validate()?;
    Ok(design)
}

pub fn build_full_design(k: usize, dose_grid: &[f64], high_dose: f64, n_per_arm: u32) -> Result<FactorialDesign> {
    let design = FactorialDesign {
        cohort_count: k,
        high_dose,
        low_doses: Vec::new(),
        n_per_arm,
        variant: DesignVariant::Full,
        full_dose_grid: Some(dose_grid.to_vec()),
    };
    design.validate()?;
    Ok(design)
}

/// Schemes 1 to 4 are fractional with 30 per arm; scheme 5 is the full
/// factorial comparator with 10 per arm. All total 300 subjects.
pub fn scheme(number: usize) -> Result<FactorialDesign> {
    match number {
        1..=4 => build_design(5, SCHEME_HIGH_DOSE, &SCHEME_LOW_DOSES[number - 1], 30),
        5 => build_full_design(5, &FULL_GRID, SCHEME_HIGH_DOSE, 10),
        _ => Err(Error::arg(format!("scheme {number} is not one of 1-5"))),
    }
}

/// The five schemes with their display names.
pub fn all_schemes() -> Vec<(String, FactorialDesign)> {
    (1..=5)
        .map(|i| (i.to_string(), scheme(i).expect("preset schemes are valid")))
        .collect()
}

impl FactorialDesign {
    pub fn validate(&self) -> Result<()> {
        if self.cohort_count == 0 {
            return Err(Error::config("cohort_count", "must be at least 1"));
        }
        if !positive(self.high_dose) {
            return Err(Error::config("high_dose", "must be positive"));
        }
        if self.n_per_arm == 0 {
            return Err(Error::config("n_per_arm", "must be at least 1"));
        }
        match self.variant {
            DesignVariant::Fractional => {
                if self.low_doses.len() != self.cohort_count {
                    return Err(Error::config(
                        "low_doses",
                        format!("must list one dose per cohort ({} expected)", self.cohort_count),
                    ));
                }
                for (i, &ld) in self.low_doses.iter().enumerate() {
                    if !positive(ld) {
                        return Err(Error::config(format!("low_doses[{i}]"), "must be positive"));
                    }
                    if ld >= self.high_dose {
                        return Err(Error::config(
                            format!("low_doses[{i}]"),
                            format!("low dose {ld} must be below the high dose {}", self.high_dose),
                        ));
                    }
                }
            }
            DesignVariant::Full => {
                let Some(grid) = &self.full_dose_grid else {
                    return Err(Error::config("full_dose_grid", "required for the full variant"));
                };
                for (i, &d) in grid.iter().enumerate() {
                    if !positive(d) {
                        return Err(Error::config(format!("full_dose_grid[{i}]"), "must be positive"));
                    }
                    if i > 0 && d <= grid[i - 1] {
                        return Err(Error::config(format!("full_dose_grid[{i}]"), "must be strictly increasing"));
                    }
                }
                if !grid.iter().any(|&d| d == self.high_dose) {
                    return Err(Error::config("full_dose_grid", "must contain the high dose"));
                }
                if grid.iter().any(|&d| d > self.high_dose) {
                    return Err(Error::config("full_dose_grid", "must not exceed the high dose"));
                }
            }
        }
        Ok(())
    }

    /// Arm doses for `cohort`, ascending.
    pub fn arm_doses(&self, cohort: usize) -> Vec<f64> {
        match self.variant {
            DesignVariant::Fractional => vec![self.low_doses[cohort], self.high_dose],
            DesignVariant::Full => self.full_dose_grid.clone().unwrap_or_default(),
        }
    }

    pub fn arms_per_cohort(&self) -> usize {
        match self.variant {
            DesignVariant::Fractional => 2,
            DesignVariant::Full => self.full_dose_grid.as_ref().map_or(0, Vec::len),
        }
    }

    pub fn total_sample_size(&self) -> u32 {
        (self.cohort_count * self.arms_per_cohort()) as u32 * self.n_per_arm
    }

    pub fn lowest_dose(&self) -> f64 {
        (0..self.cohort_count)
            .flat_map(|c| self.arm_doses(c))
            .fold(self.high_dose, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_sizes() {
        for i in 1..=5 {
            assert_eq!(scheme(i).unwrap().total_sample_size(), 300);
        }
        assert_eq!(scheme(3).unwrap().low_doses, vec![450.0, 300.0, 250.0, 350.0, 400.0]);
    }

    #[test]
    fn low_dose_must_be_below_high() {
        let err = build_design(5, 500.0, &[250.0, 300.0, 500.0, 400.0, 450.0], 30).unwrap_err();
        assert!(err.to_string().contains("low_doses[2]"));
        assert!(build_design(0, 500.0, &[], 30).is_err());
    }

    #[test]
    fn full_grid_rules() {
        assert_eq!(build_full_design(5, &[500.0], 500.0, 30).unwrap().total_sample_size(), 150);
        assert!(build_full_design(5, &[250.0, 300.0], 500.0, 10).is_err());
    }
}
