use serde::{Deserialize, Serialize};

use super::distributions::{t_cdf, t_quantile};
use super::{float_or_tag, mean, observed, variance, Alternative, HypothesisSpec, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    /// Sample mean, or difference of means for two samples.
    pub estimate: f64,
    /// One-sided intervals use an infinite endpoint.
    #[serde(with = "float_or_tag")]
    pub ci_low: f64,
    #[serde(with = "float_or_tag")]
    pub ci_high: f64,
    pub n_x: usize,
    pub n_y: Option<usize>,
    pub spec: HypothesisSpec,
}

/// One-sample t-test, or Welch's unequal-variance test when `y` is given.
pub fn t_test(x: &[Option<f64>], y: Option<&[Option<f64>]>, spec: HypothesisSpec) -> Result<TTestResult, StatsError> {
    let xs = observed(x);
    if xs.len() < 2 {
        return Err(StatsError::InsufficientData { what: "t-test", needed: 2, found: xs.len() });
    }
    let nx = xs.len() as f64;
    let (estimate, se, df, n_y) = match y {
        None => {
            let vx = variance(&xs);
            (mean(&xs), (vx / nx).sqrt(), nx - 1.0, None)
        }
        Some(y) => {
            let ys = observed(y);
            if ys.len() < 2 {
                return Err(StatsError::InsufficientData { what: "t-test", needed: 2, found: ys.len() });
            }
            let ny = ys.len() as f64;
            let (a, b) = (variance(&xs) / nx, variance(&ys) / ny);
            let df = (a + b) * (a + b) / (a * a / (nx - 1.0) + b * b / (ny - 1.0));
            (mean(&xs) - mean(&ys), (a + b).sqrt(), df, Some(ys.len()))
        }
    };
    if se.is_nan() || se <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let statistic = (estimate - spec.mu) / se;
    let p_value = match spec.alternative {
        Alternative::TwoSided => (2.0 * t_cdf(-statistic.abs(), df)?).min(1.0),
        Alternative::Greater => t_cdf(-statistic, df)?,
        Alternative::Less => t_cdf(statistic, df)?,
    };
    let cl = spec.conf_level;
    let (ci_low, ci_high) = match spec.alternative {
        Alternative::TwoSided => {
            let q = t_quantile(1.0 - (1.0 - cl) / 2.0, df)?;
            (estimate - q * se, estimate + q * se)
        }
        Alternative::Greater => (estimate - t_quantile(cl, df)? * se, f64::INFINITY),
        Alternative::Less => (f64::NEG_INFINITY, estimate + t_quantile(cl, df)? * se),
    };
    Ok(TTestResult { statistic, df, p_value, estimate, ci_low, ci_high, n_x: xs.len(), n_y, spec })
}
