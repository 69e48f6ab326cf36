use serde::{Deserialize, Serialize};

use super::{mean, observed, variance, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub n: usize,
    pub n_missing: usize,
    pub mean: f64,
    /// `None` when fewer than two values are present.
    pub sd: Option<f64>,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation of order statistics: `h = p (n - 1)`,
/// interpolating between `floor(h)` and `ceil(h)`. `sorted` must be
/// non-empty and ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn numeric_summary(values: &[Option<f64>]) -> Result<NumericSummary, StatsError> {
    let mut xs = observed(values);
    if xs.is_empty() {
        return Err(StatsError::InsufficientData { what: "numeric summary", needed: 1, found: 0 });
    }
    let m = mean(&xs);
    let sd = (xs.len() >= 2).then(|| variance(&xs).sqrt());
    xs.sort_by(f64::total_cmp);
    Ok(NumericSummary {
        n: xs.len(),
        n_missing: values.len() - xs.len(),
        mean: m,
        sd,
        min: xs[0],
        q1: quantile_sorted(&xs, 0.25),
        median: quantile_sorted(&xs, 0.5),
        q3: quantile_sorted(&xs, 0.75),
        max: xs[xs.len() - 1],
    })
}
