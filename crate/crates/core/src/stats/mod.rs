//! Numerical kernels behind the statistics modules.
//!
//! All kernels are pure functions of their inputs. Missing values are
//! dropped per variable for one-variable procedures and pairwise for
//! two-variable procedures.

pub mod contingency;
pub mod distributions;
pub mod plot;
pub mod regression;
pub mod summary;
pub mod ttest;
pub mod wilcoxon;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ColumnType, DataError};
pub use contingency::{contingency, ContingencyResult};
pub use distributions::{chisq_cdf, normal_cdf, t_cdf, t_quantile, DistError};
pub use plot::{plot_spec, PlotKind, PlotSpec};
pub use regression::{ols_fit, RegressionFit};
pub use summary::{numeric_summary, NumericSummary};
pub use ttest::{t_test, TTestResult};
pub use wilcoxon::{wilcoxon_rank_sum, WilcoxonResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alternative {
    #[serde(rename = "two.sided")]
    TwoSided,
    #[serde(rename = "greater")]
    Greater,
    #[serde(rename = "less")]
    Less,
}

impl Alternative {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "two.sided" => Some(Alternative::TwoSided),
            "greater" => Some(Alternative::Greater),
            "less" => Some(Alternative::Less),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Alternative::TwoSided => "two.sided",
            Alternative::Greater => "greater",
            Alternative::Less => "less",
        }
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Alternative hypothesis, confidence level and hypothesized value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    pub alternative: Alternative,
    pub conf_level: f64,
    pub mu: f64,
}

impl HypothesisSpec {
    pub fn new(alternative: Alternative, conf_level: f64, mu: f64) -> Result<Self, StatsError> {
        if !(conf_level > 0.0 && conf_level < 1.0) {
            return Err(StatsError::Invalid(format!("conf_level must lie strictly inside (0, 1), got {conf_level}")));
        }
        if !mu.is_finite() {
            return Err(StatsError::Invalid("mu must be finite".into()));
        }
        Ok(HypothesisSpec { alternative, conf_level, mu })
    }

    pub fn two_sided(mu: f64) -> Self {
        HypothesisSpec { alternative: Alternative::TwoSided, conf_level: 0.95, mu }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("{what} needs at least {needed} non-missing values, found {found}")]
    InsufficientData { what: &'static str, needed: usize, found: usize },
    #[error("sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("x is constant, so the regression is singular")]
    Singular,
    #[error("degenerate variance: the data have no variability")]
    DegenerateVariance,
    #[error("variable `{name}` must be {expected}")]
    TypeMismatch { name: String, expected: ColumnType },
    #[error("{0}")]
    Invalid(String),
}

/// Non-missing values of a numeric sequence.
pub(crate) fn observed(values: &[Option<f64>]) -> Vec<f64> {
    values.iter().flatten().copied().collect()
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n - 1 denominator.
pub(crate) fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Serde adapter writing non-finite floats as the strings `"Inf"`, `"-Inf"`
/// and `"NaN"`, since JSON has no literal for them.
pub mod float_or_tag {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&crate::numfmt::format_number(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Tag(t) => match t.as_str() {
                "Inf" => Ok(f64::INFINITY),
                "-Inf" => Ok(f64::NEG_INFINITY),
                "NaN" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("invalid float tag {other}"))),
            },
        }
    }
}
