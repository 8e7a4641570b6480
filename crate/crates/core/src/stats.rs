//! Small descriptive statistics shared by the analyses.
//!
//! Standard deviations are population statistics (divide by `n`).

use alloc::vec::Vec;

use crate::{Error, Result};

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Population standard deviation, two-pass.
pub fn population_std(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some(libm::sqrt(ss / xs.len() as f64))
}

/// Consecutive differences `x[i+1] - x[i]`.
pub fn differences(xs: &[f64]) -> Vec<f64> {
    xs.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Standard deviation of the layer-to-layer differences of a series.
///
/// Zero when the series changes by the same amount at every step, large when
/// steps alternate between big and small. Applied to information-imbalance
/// series this is the smoothness diagnostic; applied to probe accuracies it is
/// the trajectory roughness.
pub fn smoothness(series: &[f64]) -> Result<f64> {
    if series.len() < 3 {
        return Err(Error::SeriesTooShort { len: series.len(), min: 3 });
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    let diffs = differences(series);
    // With all steps bitwise equal the deviation is exactly zero.
    if diffs.iter().all(|d| *d == diffs[0]) {
        return Ok(0.0);
    }
    Ok(population_std(&diffs).unwrap_or(0.0))
}
