//! Weighted isotonic (nondecreasing) regression by pool-adjacent-violators.

use crate::error::{Error, Result};

/// A maximal run of indices pooled to a common value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledBlock {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub value: f64,
    pub weight: f64,
}

impl PooledBlock {
    pub fn contains(&self, index: usize) -> bool {
        (self.start..self.end).contains(&index)
    }
}

fn validate(rates: &[f64], weights: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::arg("isotonic regression needs at least one value"));
    }
    if rates.len() != weights.len() {
        return Err(Error::arg(format!(
            "{} rates but {} weights",
            rates.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::arg(format!("weights must be positive, got {w}")));
    }
    if let Some(r) = rates.iter().find(|r| !r.is_finite()) {
        return Err(Error::arg(format!("rates must be finite, got {r}")));
    }
    Ok(())
}

/// Blocks of the weighted least-squares nondecreasing fit, in index order.
pub fn pava_blocks(rates: &[f64], weights: &[f64]) -> Result<Vec<PooledBlock>> {
    validate(rates, weights)?;
    let mut blocks: Vec<PooledBlock> = Vec::with_capacity(rates.len());
    for (i, (&r, &w)) in rates.iter().zip(weights).enumerate() {
        let mut current = PooledBlock {
            start: i,
            end: i + 1,
            value: r,
            weight: w,
        };
        while let Some(last) = blocks.last() {
            if last.value <= current.value {
                break;
            }
            let last = blocks.pop().unwrap();
            let weight = last.weight + current.weight;
            current = PooledBlock {
                start: last.start,
                end: current.end,
                value: (last.value * last.weight + current.value * current.weight) / weight,
                weight,
            };
        }
        blocks.push(current);
    }
    Ok(blocks)
}

/// Nondecreasing vector minimizing `sum w_i (r_i - out_i)^2`.
pub fn pava_isotonic(rates: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    let blocks = pava_blocks(rates, weights)?;
    let mut out = Vec::with_capacity(rates.len());
    for b in &blocks {
        out.extend(std::iter::repeat_n(b.value, b.end - b.start));
    }
    Ok(out)
}
