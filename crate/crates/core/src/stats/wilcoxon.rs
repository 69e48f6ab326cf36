use serde::{Deserialize, Serialize};

use super::distributions::normal_cdf;
use super::{observed, Alternative, HypothesisSpec, StatsError};

/// Largest pooled sample size handled by exact enumeration.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub w_statistic: f64,
    pub p_value: f64,
    pub exact: bool,
    pub n_x: usize,
    pub n_y: usize,
    pub spec: HypothesisSpec,
}

/// Midranks (1-based) of `values`, plus the sizes of tied groups.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Null distribution of the Mann-Whitney `W` for sample sizes `n` and `m`:
/// entry `w` counts the rank assignments giving `W = w`.
pub fn rank_sum_counts(n: usize, m: usize) -> Vec<u64> {
    let total = n + m;
    let max_w = n * m;
    // counts[k][s]: subsets of size k drawn from the ranks seen so far with
    // offset rank sum s = (sum of ranks) - k(k+1)/2.
    let mut counts = vec![vec![0u64; max_w + 1]; n + 1];
    counts[0][0] = 1;
    for r in 1..=total {
        for k in (1..=n.min(r)).rev() {
            // Adding rank r to a (k-1)-subset raises the offset sum by r - k.
            let shift = r - k;
            if shift > max_w {
                continue;
            }
            for s in (shift..=max_w).rev() {
                counts[k][s] += counts[k - 1][s - shift];
            }
        }
    }
    counts.swap_remove(n)
}

/// Wilcoxon rank-sum (Mann-Whitney) test of `x` against `y` shifted by
/// `spec.mu`.
pub fn wilcoxon_rank_sum(
    x: &[Option<f64>],
    y: &[Option<f64>],
    spec: HypothesisSpec,
) -> Result<WilcoxonResult, StatsError> {
    let xs = observed(x);
    let ys: Vec<f64> = observed(y).into_iter().map(|v| v + spec.mu).collect();
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::InsufficientData {
            what: "Wilcoxon rank-sum test",
            needed: 1,
            found: xs.len().min(ys.len()),
        });
    }
    let (n, m) = (xs.len(), ys.len());
    let pooled: Vec<f64> = xs.iter().chain(&ys).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum: f64 = ranks[..n].iter().sum();
    let w = rank_sum - (n * (n + 1)) as f64 / 2.0;

    let exact = n + m <= EXACT_LIMIT && ties.is_empty();
    let p_value = if exact {
        let counts = rank_sum_counts(n, m);
        let total: u64 = counts.iter().sum();
        let wi = w.round() as usize;
        let le: u64 = counts[..=wi].iter().sum();
        let ge: u64 = counts[wi..].iter().sum();
        let (p_le, p_ge) = (le as f64 / total as f64, ge as f64 / total as f64);
        match spec.alternative {
            Alternative::TwoSided => (2.0 * p_le.min(p_ge)).min(1.0),
            Alternative::Greater => p_ge,
            Alternative::Less => p_le,
        }
    } else {
        let (nf, mf, total) = (n as f64, m as f64, (n + m) as f64);
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (total * (total - 1.0));
        let sigma = (nf * mf / 12.0 * ((total + 1.0) - tie_term)).sqrt();
        let centred = w - nf * mf / 2.0;
        if sigma == 0.0 {
            1.0
        } else {
            let correction = match spec.alternative {
                Alternative::TwoSided => 0.5 * centred.signum(),
                Alternative::Greater => 0.5,
                Alternative::Less => -0.5,
            };
            let z = (centred - correction) / sigma;
            match spec.alternative {
                Alternative::TwoSided => (2.0 * normal_cdf(-z.abs())).min(1.0),
                Alternative::Greater => normal_cdf(-z),
                Alternative::Less => normal_cdf(z),
            }
        }
    };
    Ok(WilcoxonResult { w_statistic: w, p_value, exact, n_x: n, n_y: m, spec })
}
