use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::distributions::chisq_sf;
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyResult {
    pub row_levels: Vec<String>,
    pub col_levels: Vec<String>,
    pub observed: Vec<Vec<u64>>,
    pub expected: Vec<Vec<f64>>,
    pub chi_square: f64,
    pub df: f64,
    pub p_value: f64,
}

pub(crate) fn sorted_levels(values: &[Option<&str>]) -> Vec<String> {
    values.iter().flatten().copied().collect::<BTreeSet<&str>>().into_iter().map(str::to_string).collect()
}

/// Cross-tabulates two categorical sequences (rows from `a`, columns from
/// `b`) and computes Pearson's chi-square without continuity correction.
pub fn contingency(a: &[Option<&str>], b: &[Option<&str>]) -> Result<ContingencyResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let row_levels = sorted_levels(a);
    let col_levels = sorted_levels(b);
    if row_levels.len() < 2 || col_levels.len() < 2 {
        return Err(StatsError::Invalid("contingency table needs at least two levels in each variable".into()));
    }
    let mut observed = vec![vec![0u64; col_levels.len()]; row_levels.len()];
    for (ra, rb) in a.iter().zip(b) {
        if let (Some(ra), Some(rb)) = (ra, rb) {
            let i = row_levels.binary_search_by(|l| l.as_str().cmp(ra)).expect("level present");
            let j = col_levels.binary_search_by(|l| l.as_str().cmp(rb)).expect("level present");
            observed[i][j] += 1;
        }
    }
    let row_totals: Vec<u64> = observed.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<u64> = (0..col_levels.len()).map(|j| observed.iter().map(|r| r[j]).sum()).collect();
    if let Some(i) = row_totals.iter().position(|&t| t == 0) {
        return Err(StatsError::Invalid(format!("level `{}` has no complete observations", row_levels[i])));
    }
    if let Some(j) = col_totals.iter().position(|&t| t == 0) {
        return Err(StatsError::Invalid(format!("level `{}` has no complete observations", col_levels[j])));
    }
    let total: u64 = row_totals.iter().sum();
    let nf = total as f64;
    let expected: Vec<Vec<f64>> =
        row_totals.iter().map(|&r| col_totals.iter().map(|&c| (r * c) as f64 / nf).collect()).collect();
    // Sum the cell contributions in sorted order so the statistic is
    // bit-identical under row/column permutation and transposition.
    let mut terms: Vec<f64> = observed
        .iter()
        .zip(&expected)
        .flat_map(|(o, e)| o.iter().zip(e).map(|(&o, &e)| (o as f64 - e).powi(2) / e))
        .collect();
    terms.sort_by(f64::total_cmp);
    let chi_square: f64 = terms.iter().sum();
    let df = ((row_levels.len() - 1) * (col_levels.len() - 1)) as f64;
    let p_value = chisq_sf(chi_square, df)?;
    Ok(ContingencyResult { row_levels, col_levels, observed, expected, chi_square, df, p_value })
}
