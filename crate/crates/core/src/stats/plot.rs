//! Renderer-independent plot geometry.
//!
//! A [`PlotSpec`] serializes as
//! `{"kind": "...", "geometry": {...}, "x_label": "...", "y_label": "..."}`
//! and is what both the browser client and the report renderer draw from.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::contingency::sorted_levels;
use super::summary::quantile_sorted;
use super::StatsError;
use crate::dataset::binning::{bin_index, equal_width_breaks};
use crate::dataset::{ColumnType, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlotKind {
    Histogram,
    Bar,
    Scatter,
    Box,
    Mosaic,
}

impl PlotKind {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "histogram" => PlotKind::Histogram,
            "bar" => PlotKind::Bar,
            "scatter" => PlotKind::Scatter,
            "box" => PlotKind::Box,
            "mosaic" => PlotKind::Mosaic,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Histogram => "histogram",
            PlotKind::Bar => "bar",
            PlotKind::Scatter => "scatter",
            PlotKind::Box => "box",
            PlotKind::Mosaic => "mosaic",
        }
    }

    /// Required type of the first bound variable.
    pub fn x_type(self) -> ColumnType {
        match self {
            PlotKind::Histogram | PlotKind::Scatter | PlotKind::Box => ColumnType::Numeric,
            PlotKind::Bar | PlotKind::Mosaic => ColumnType::Categorical,
        }
    }

    /// Required type of the second variable, if the kind uses one.
    pub fn y_type(self) -> Option<ColumnType> {
        match self {
            PlotKind::Scatter => Some(ColumnType::Numeric),
            PlotKind::Box | PlotKind::Mosaic => Some(ColumnType::Categorical),
            PlotKind::Histogram | PlotKind::Bar => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub group: String,
    pub n: usize,
    pub lower_whisker: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosaicRect {
    pub col_level: String,
    pub row_level: String,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "geometry")]
pub enum Geometry {
    Histogram { breaks: Vec<f64>, counts: Vec<u64> },
    Bar { levels: Vec<String>, counts: Vec<u64> },
    Scatter { points: Vec<[f64; 2]> },
    Box { groups: Vec<BoxStats> },
    Mosaic { rects: Vec<MosaicRect> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    #[serde(flatten)]
    pub geometry: Geometry,
    pub x_label: String,
    pub y_label: String,
}

impl PlotSpec {
    pub fn kind(&self) -> PlotKind {
        match self.geometry {
            Geometry::Histogram { .. } => PlotKind::Histogram,
            Geometry::Bar { .. } => PlotKind::Bar,
            Geometry::Scatter { .. } => PlotKind::Scatter,
            Geometry::Box { .. } => PlotKind::Box,
            Geometry::Mosaic { .. } => PlotKind::Mosaic,
        }
    }
}

fn check_type(ds: &Dataset, name: &str, expected: ColumnType) -> Result<(), StatsError> {
    let col = ds.column(name).ok_or_else(|| StatsError::Data(crate::dataset::DataError::UnknownColumn(name.into())))?;
    if col.ctype() != expected {
        return Err(StatsError::TypeMismatch { name: name.into(), expected });
    }
    Ok(())
}

/// Builds plot geometry for `kind` from the bound variables. `y` is ignored
/// by one-variable kinds; `bins` only affects histograms and defaults to
/// `ceil(sqrt(n))`.
pub fn plot_spec(
    kind: PlotKind,
    ds: &Dataset,
    x: &str,
    y: Option<&str>,
    bins: Option<usize>,
) -> Result<PlotSpec, StatsError> {
    check_type(ds, x, kind.x_type())?;
    let y = match kind.y_type() {
        Some(t) => {
            let y = y.ok_or_else(|| StatsError::Invalid(format!("{} plot needs a second variable", kind.name())))?;
            check_type(ds, y, t)?;
            Some(y)
        }
        None => None,
    };
    let xcol = ds.column(x).expect("checked");
    let ycol = y.map(|y| ds.column(y).expect("checked"));
    let (geometry, y_label) = match kind {
        PlotKind::Histogram => (histogram(&xcol.numbers(), bins)?, "count".to_string()),
        PlotKind::Bar => {
            let labels = xcol.labels();
            let levels = sorted_levels(&labels);
            let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
            for l in labels.iter().flatten() {
                *counts.entry(l).or_default() += 1;
            }
            let counts = levels.iter().map(|l| counts[l.as_str()]).collect();
            (Geometry::Bar { levels, counts }, "count".to_string())
        }
        PlotKind::Scatter => {
            let ycol = ycol.expect("scatter has y");
            let points = xcol.numbers().into_iter().zip(ycol.numbers()).filter_map(|(a, b)| Some([a?, b?])).collect();
            (Geometry::Scatter { points }, ycol.name().to_string())
        }
        PlotKind::Box => {
            let ycol = ycol.expect("box has group");
            (box_geometry(&xcol.numbers(), &ycol.labels())?, ycol.name().to_string())
        }
        PlotKind::Mosaic => {
            let ycol = ycol.expect("mosaic has y");
            (mosaic(&xcol.labels(), &ycol.labels())?, ycol.name().to_string())
        }
    };
    Ok(PlotSpec { geometry, x_label: x.to_string(), y_label })
}

fn histogram(values: &[Option<f64>], bins: Option<usize>) -> Result<Geometry, StatsError> {
    let xs: Vec<f64> = values.iter().flatten().copied().collect();
    if xs.is_empty() {
        return Err(StatsError::InsufficientData { what: "histogram", needed: 1, found: 0 });
    }
    let bins = match bins {
        Some(0) => return Err(StatsError::Invalid("bins must be positive".into())),
        Some(b) => b,
        None => (xs.len() as f64).sqrt().ceil() as usize,
    };
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // A single distinct value gets one unit-wide bin around it.
    let (breaks, bins) =
        if min < max { (equal_width_breaks(min, max, bins), bins) } else { (vec![min - 0.5, min + 0.5], 1) };
    let mut counts = vec![0u64; bins];
    for x in xs {
        counts[bin_index(x, &breaks).expect("within range")] += 1;
    }
    Ok(Geometry::Histogram { breaks, counts })
}

fn box_geometry(values: &[Option<f64>], groups: &[Option<&str>]) -> Result<Geometry, StatsError> {
    let mut by_group: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (v, g) in values.iter().zip(groups) {
        if let (Some(v), Some(g)) = (v, g) {
            by_group.entry(g).or_default().push(*v);
        }
    }
    if by_group.is_empty() {
        return Err(StatsError::InsufficientData { what: "box plot", needed: 1, found: 0 });
    }
    let groups = by_group
        .into_iter()
        .map(|(g, mut xs)| {
            xs.sort_by(f64::total_cmp);
            let q1 = quantile_sorted(&xs, 0.25);
            let q3 = quantile_sorted(&xs, 0.75);
            let reach = 1.5 * (q3 - q1);
            let (lo_fence, hi_fence) = (q1 - reach, q3 + reach);
            let inside = || xs.iter().copied().filter(|&x| x >= lo_fence && x <= hi_fence);
            BoxStats {
                group: g.to_string(),
                n: xs.len(),
                lower_whisker: inside().fold(f64::INFINITY, f64::min),
                q1,
                median: quantile_sorted(&xs, 0.5),
                q3,
                upper_whisker: inside().fold(f64::NEG_INFINITY, f64::max),
                outliers: xs.iter().copied().filter(|&x| x < lo_fence || x > hi_fence).collect(),
            }
        })
        .collect();
    Ok(Geometry::Box { groups })
}

fn mosaic(a: &[Option<&str>], b: &[Option<&str>]) -> Result<Geometry, StatsError> {
    let col_levels = sorted_levels(a);
    let row_levels = sorted_levels(b);
    let mut counts = vec![vec![0u64; row_levels.len()]; col_levels.len()];
    let mut total = 0u64;
    for (ca, cb) in a.iter().zip(b) {
        if let (Some(ca), Some(cb)) = (ca, cb) {
            let i = col_levels.binary_search_by(|l| l.as_str().cmp(ca)).expect("level");
            let j = row_levels.binary_search_by(|l| l.as_str().cmp(cb)).expect("level");
            counts[i][j] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(StatsError::InsufficientData { what: "mosaic plot", needed: 1, found: 0 });
    }
    let mut rects = Vec::new();
    let mut x = 0.0;
    for (i, col) in counts.iter().enumerate() {
        let col_total: u64 = col.iter().sum();
        let width = col_total as f64 / total as f64;
        let mut y = 0.0;
        for (j, &count) in col.iter().enumerate() {
            let height = if col_total == 0 { 0.0 } else { count as f64 / col_total as f64 };
            rects.push(MosaicRect {
                col_level: col_levels[i].clone(),
                row_level: row_levels[j].clone(),
                x,
                y,
                width,
                height,
                count,
            });
            y += height;
        }
        x += width;
    }
    Ok(Geometry::Mosaic { rects })
}
