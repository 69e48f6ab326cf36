use super::binning::{bin_index, equal_width_breaks};
use super::{CellValue, Column, ColumnType, DataError, Dataset};
use crate::numfmt::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformOp {
    /// Natural logarithm.
    Log,
    Sqrt,
    Square,
    /// Centre and scale by the sample (n - 1) standard deviation.
    Standardize,
    BinEqualWidth {
        bins: usize,
    },
}

impl TransformOp {
    /// Parses the script-level name (`log`, `sqrt`, `square`, `standardize`,
    /// `bin`). `bins` is only consulted for `bin`.
    pub fn from_name(name: &str, bins: Option<usize>) -> Option<Self> {
        Some(match name {
            "log" => TransformOp::Log,
            "sqrt" => TransformOp::Sqrt,
            "square" => TransformOp::Square,
            "standardize" => TransformOp::Standardize,
            "bin" => TransformOp::BinEqualWidth { bins: bins? },
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TransformOp::Log => "log",
            TransformOp::Sqrt => "sqrt",
            TransformOp::Square => "square",
            TransformOp::Standardize => "standardize",
            TransformOp::BinEqualWidth { .. } => "bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformSpec {
    pub source: String,
    pub op: TransformOp,
    pub target: String,
}

/// Returns `ds` with one new column `spec.target` derived from
/// `spec.source`. Missing inputs stay missing.
pub fn apply_transform(ds: &Dataset, spec: &TransformSpec) -> Result<Dataset, DataError> {
    if spec.target.is_empty() {
        return Err(DataError::EmptyName);
    }
    if ds.check_variable(&spec.target) {
        return Err(DataError::TargetExists(spec.target.clone()));
    }
    let source = ds.typed_column(&spec.source, ColumnType::Numeric)?;
    let values = source.numbers();
    let observed = || values.iter().enumerate().filter_map(|(i, v)| v.map(|x| (i + 1, x)));

    let column = match spec.op {
        TransformOp::Log => {
            if let Some((row, value)) = observed().find(|&(_, x)| x <= 0.0) {
                return Err(DataError::Domain { op: "log", row, value, requirement: "log requires values > 0" });
            }
            Column::numeric(&spec.target, &map_values(&values, f64::ln))?
        }
        TransformOp::Sqrt => {
            if let Some((row, value)) = observed().find(|&(_, x)| x < 0.0) {
                return Err(DataError::Domain { op: "sqrt", row, value, requirement: "sqrt requires values >= 0" });
            }
            Column::numeric(&spec.target, &map_values(&values, f64::sqrt))?
        }
        TransformOp::Square => Column::numeric(&spec.target, &map_values(&values, |x| x * x))?,
        TransformOp::Standardize => {
            let xs: Vec<f64> = observed().map(|(_, x)| x).collect();
            if xs.len() < 2 {
                return Err(DataError::Degenerate {
                    op: "standardize",
                    message: "needs at least two observed values".into(),
                });
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            if sd <= 0.0 {
                return Err(DataError::Degenerate {
                    op: "standardize",
                    message: "sample standard deviation is zero".into(),
                });
            }
            Column::numeric(&spec.target, &map_values(&values, |x| (x - mean) / sd))?
        }
        TransformOp::BinEqualWidth { bins } => {
            if bins == 0 {
                return Err(DataError::Degenerate { op: "bin", message: "bins must be positive".into() });
            }
            let (min, max) =
                observed().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, x)| (lo.min(x), hi.max(x)));
            if min >= max || min.is_nan() || max.is_nan() {
                return Err(DataError::Degenerate {
                    op: "bin",
                    message: "needs at least two distinct observed values".into(),
                });
            }
            let breaks = equal_width_breaks(min, max, bins);
            let labels: Vec<String> = (0..bins)
                .map(|i| {
                    let close = if i + 1 == bins { ']' } else { ')' };
                    format!("[{},{}{}", format_number(breaks[i]), format_number(breaks[i + 1]), close)
                })
                .collect();
            let cells = values
                .iter()
                .map(|v| match v.and_then(|x| bin_index(x, &breaks)) {
                    Some(i) => CellValue::Label(labels[i].clone()),
                    None => CellValue::Missing,
                })
                .collect();
            Column::new(&spec.target, ColumnType::Categorical, cells)?
        }
    };
    ds.with_column(column)
}

fn map_values(values: &[Option<f64>], f: impl Fn(f64) -> f64) -> Vec<Option<f64>> {
    values.iter().map(|v| v.map(&f)).collect()
}
