use serde::{Deserialize, Serialize};

use super::distributions::t_cdf;
use super::{float_or_tag, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    #[serde(with = "float_or_tag")]
    pub t_slope: f64,
    pub p_slope: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub n: usize,
}

/// Simple least-squares regression of `y` on `x` after pairwise deletion.
pub fn ols_fit(x: &[Option<f64>], y: &[Option<f64>]) -> Result<RegressionFit, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = x.iter().zip(y).filter_map(|(a, b)| Some(((*a)?, (*b)?))).unzip();
    let n = xs.len();
    if n < 3 {
        return Err(StatsError::InsufficientData { what: "regression", needed: 3, found: n });
    }
    let nf = n as f64;
    let x_bar = xs.iter().sum::<f64>() / nf;
    let y_bar = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in xs.iter().zip(&ys) {
        let (dx, dy) = (a - x_bar, b - y_bar);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::Singular);
    }
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| b - (intercept + slope * a)).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    // A constant response is fitted perfectly.
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let sigma2 = sse / (nf - 2.0);
    let slope_se = (sigma2 / sxx).sqrt();
    let intercept_se = (sigma2 * (1.0 / nf + x_bar * x_bar / sxx)).sqrt();
    let (t_slope, p_slope) = if slope_se > 0.0 {
        let t = slope / slope_se;
        (t, (2.0 * t_cdf(-t.abs(), nf - 2.0)?).min(1.0))
    } else if slope == 0.0 {
        (0.0, 1.0)
    } else {
        (slope.signum() * f64::INFINITY, 0.0)
    };
    Ok(RegressionFit { slope, intercept, slope_se, intercept_se, t_slope, p_slope, r_squared, residuals, n })
}
