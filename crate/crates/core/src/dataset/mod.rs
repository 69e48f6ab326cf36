//! Typed columnar datasets.
//!
//! A [`Dataset`] is an immutable, ordered set of equally long [`Column`]s,
//! each either numeric or categorical. Every operation that "changes" a
//! dataset returns a new value.

pub mod binning;
mod csv;
mod transform;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

pub use self::csv::{infer_column_type, parse_csv, parse_csv_with, serialize_csv, serialize_csv_with};
pub use self::transform::{apply_transform, TransformOp, TransformSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnType {
    Numeric,
    Categorical,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnType::Numeric => f.write_str("numeric"),
            ColumnType::Categorical => f.write_str("categorical"),
        }
    }
}

/// One cell. Numbers are always finite.
#[derive(Debug, Clone)]
pub enum CellValue {
    Number(f64),
    Label(String),
    Missing,
}

impl CellValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            CellValue::Number(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            CellValue::Label(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, CellValue::Missing)
    }
}

// Numbers compare bitwise so equality is exact and reflexive.
impl PartialEq for CellValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CellValue::Number(a), CellValue::Number(b)) => a.to_bits() == b.to_bits(),
            (CellValue::Label(a), CellValue::Label(b)) => a == b,
            (CellValue::Missing, CellValue::Missing) => true,
            _ => false,
        }
    }
}

impl Eq for CellValue {}

impl Serialize for CellValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CellValue::Number(x) => s.serialize_f64(*x),
            CellValue::Label(l) => s.serialize_str(l),
            CellValue::Missing => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    name: String,
    ctype: ColumnType,
    cells: Vec<CellValue>,
}

impl Column {
    /// Builds a column, checking that every non-missing cell matches `ctype`.
    pub fn new(name: impl Into<String>, ctype: ColumnType, cells: Vec<CellValue>) -> Result<Self, DataError> {
        let name = name.into();
        if name.is_empty() {
            return Err(DataError::EmptyName);
        }
        for (row, cell) in cells.iter().enumerate() {
            let ok = match (cell, ctype) {
                (CellValue::Missing, _) => true,
                (CellValue::Number(x), ColumnType::Numeric) => x.is_finite(),
                (CellValue::Label(_), ColumnType::Categorical) => true,
                _ => false,
            };
            if !ok {
                return Err(DataError::CellType { name, row: row + 1, expected: ctype });
            }
        }
        Ok(Column { name, ctype, cells })
    }

    pub fn numeric(name: impl Into<String>, values: &[Option<f64>]) -> Result<Self, DataError> {
        let cells = values
            .iter()
            .map(|v| match v {
                Some(x) if x.is_finite() => CellValue::Number(*x),
                _ => CellValue::Missing,
            })
            .collect();
        Column::new(name, ColumnType::Numeric, cells)
    }

    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, labels: &[Option<S>]) -> Result<Self, DataError> {
        let cells = labels
            .iter()
            .map(|v| match v {
                Some(s) => CellValue::Label(s.as_ref().to_string()),
                None => CellValue::Missing,
            })
            .collect();
        Column::new(name, ColumnType::Categorical, cells)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ctype(&self) -> ColumnType {
        self.ctype
    }

    pub fn cells(&self) -> &[CellValue] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Numeric cells as options; `None` for missing.
    pub fn numbers(&self) -> Vec<Option<f64>> {
        self.cells.iter().map(CellValue::as_number).collect()
    }

    /// Categorical cells as options; `None` for missing.
    pub fn labels(&self) -> Vec<Option<&str>> {
        self.cells.iter().map(CellValue::as_label).collect()
    }

    pub fn n_missing(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self, DataError> {
        let n_rows = columns.first().map_or(0, Column::len);
        let mut seen = HashSet::new();
        for col in &columns {
            if col.len() != n_rows {
                return Err(DataError::LengthMismatch { name: col.name.clone(), found: col.len(), expected: n_rows });
            }
            if !seen.insert(col.name.as_str()) {
                return Err(DataError::DuplicateName(col.name.clone()));
            }
        }
        Ok(Dataset { columns, n_rows })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Like [`Dataset::column`], but also checks the column type.
    pub fn typed_column(&self, name: &str, ctype: ColumnType) -> Result<&Column, DataError> {
        let col = self.column(name).ok_or_else(|| DataError::UnknownColumn(name.to_string()))?;
        if col.ctype != ctype {
            return Err(DataError::WrongType { name: name.to_string(), expected: ctype });
        }
        Ok(col)
    }

    /// Names of numeric columns, in dataset order.
    pub fn numeric_names(&self) -> Vec<String> {
        self.names_of(ColumnType::Numeric)
    }

    /// Names of categorical columns, in dataset order.
    pub fn categorical_names(&self) -> Vec<String> {
        self.names_of(ColumnType::Categorical)
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    fn names_of(&self, ctype: ColumnType) -> Vec<String> {
        self.columns.iter().filter(|c| c.ctype == ctype).map(|c| c.name.clone()).collect()
    }

    /// Exact, case-sensitive column lookup.
    pub fn check_variable(&self, name: &str) -> bool {
        self.column(name).is_some()
    }

    /// Returns a copy with `col` appended.
    pub fn with_column(&self, col: Column) -> Result<Dataset, DataError> {
        if self.check_variable(&col.name) {
            return Err(DataError::TargetExists(col.name));
        }
        if !self.columns.is_empty() && col.len() != self.n_rows {
            return Err(DataError::LengthMismatch { name: col.name.clone(), found: col.len(), expected: self.n_rows });
        }
        let n_rows = col.len();
        let mut columns = self.columns.clone();
        columns.push(col);
        Ok(Dataset { columns, n_rows })
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            n_rows: self.n_rows,
            columns: self
                .columns
                .iter()
                .map(|c| ColumnInfo { name: c.name.clone(), ctype: c.ctype, n_missing: c.n_missing() })
                .collect(),
        }
    }
}

/// Shape and types of a dataset, as returned after an upload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_rows: usize,
    pub columns: Vec<ColumnInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    #[serde(rename = "type")]
    pub ctype: ColumnType,
    pub n_missing: usize,
}

pub fn numeric_names(ds: &Dataset) -> Vec<String> {
    ds.numeric_names()
}

pub fn categorical_names(ds: &Dataset) -> Vec<String> {
    ds.categorical_names()
}

pub fn check_variable(ds: &Dataset, name: &str) -> bool {
    ds.check_variable(name)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("empty input")]
    EmptyInput,
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("duplicate column name `{0}`")]
    DuplicateName(String),
    #[error("column names must not be empty")]
    EmptyName,
    #[error("malformed CSV near row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("column `{name}` has {found} cells but the dataset has {expected} rows")]
    LengthMismatch { name: String, found: usize, expected: usize },
    #[error("column `{name}` row {row}: cell does not match type {expected}")]
    CellType { name: String, row: usize, expected: ColumnType },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{name}` must be {expected}")]
    WrongType { name: String, expected: ColumnType },
    #[error("column `{0}` already exists")]
    TargetExists(String),
    #[error("{op}: row {row} has value {value}, but {requirement}")]
    Domain { op: &'static str, row: usize, value: f64, requirement: &'static str },
    #[error("{op}: {message}")]
    Degenerate { op: &'static str, message: String },
}
