use std::io::Cursor;

use super::{CellValue, Column, ColumnType, DataError, Dataset};
use crate::numfmt::format_number;
use crate::par::{self, Parallelism};

const MISSING_TOKEN: &str = "NA";

/// How a raw field reads.
enum Token {
    Missing,
    Number(f64),
    Label,
}

fn classify(raw: &str) -> Token {
    if raw.is_empty() || raw == MISSING_TOKEN {
        return Token::Missing;
    }
    if is_decimal(raw) {
        match raw.parse::<f64>() {
            Ok(x) if x.is_finite() => Token::Number(x),
            // Overflowing literals such as 1e999.
            _ => Token::Missing,
        }
    } else {
        Token::Label
    }
}

/// `[+-]digits[.digits][(e|E)[+-]digits]`, with at least one mantissa digit.
fn is_decimal(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

/// Numeric iff every non-missing entry is a finite decimal; all-missing
/// columns are categorical.
pub fn infer_column_type<S: AsRef<str>>(raw: &[S]) -> ColumnType {
    let mut any_number = false;
    for r in raw {
        match classify(r.as_ref()) {
            Token::Missing => {}
            Token::Number(_) => any_number = true,
            Token::Label => return ColumnType::Categorical,
        }
    }
    if any_number {
        ColumnType::Numeric
    } else {
        ColumnType::Categorical
    }
}

fn build_column(name: String, raw: Vec<String>) -> Result<Column, DataError> {
    let ctype = infer_column_type(&raw);
    let cells = raw
        .into_iter()
        .map(|r| match classify(&r) {
            Token::Missing => CellValue::Missing,
            Token::Number(x) => match ctype {
                ColumnType::Numeric => CellValue::Number(x),
                ColumnType::Categorical => CellValue::Label(r),
            },
            Token::Label => CellValue::Label(r),
        })
        .collect();
    Column::new(name, ctype, cells)
}

/// Parses UTF-8 CSV text into a typed dataset, inferring column types in
/// parallel when the `parallel` feature is enabled.
pub fn parse_csv(bytes: &[u8], has_header: bool) -> Result<Dataset, DataError> {
    parse_csv_with(bytes, has_header, Parallelism::default())
}

pub fn parse_csv_with(bytes: &[u8], has_header: bool, mode: Parallelism) -> Result<Dataset, DataError> {
    let text = std::str::from_utf8(bytes).map_err(|_| DataError::Encoding)?;
    if text.trim().is_empty() {
        return Err(DataError::EmptyInput);
    }
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(Cursor::new(text.as_bytes()));

    let mut width: Option<usize> = None;
    let mut header: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<String>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| DataError::Malformed {
            row: e.position().map_or(row, |p| p.record() as usize + 1),
            message: e.to_string(),
        })?;
        let n = rec.len();
        match width {
            None => {
                width = Some(n);
                columns = vec![Vec::new(); n];
            }
            Some(w) if w != n => {
                return Err(DataError::RaggedRow { row, expected: w, found: n });
            }
            Some(_) => {}
        }
        if has_header && header.is_none() {
            header = Some(rec.iter().map(str::to_string).collect());
            continue;
        }
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            col.push(field.to_string());
        }
    }
    let width = width.ok_or(DataError::EmptyInput)?;
    let names = header.unwrap_or_else(|| (1..=width).map(|k| format!("c{k}")).collect());
    let mut seen = std::collections::HashSet::new();
    for name in &names {
        if name.is_empty() {
            return Err(DataError::EmptyName);
        }
        if !seen.insert(name.as_str()) {
            return Err(DataError::DuplicateName(name.clone()));
        }
    }

    let built = par::map(mode, names.into_iter().zip(columns).collect(), |(n, raw)| build_column(n, raw));
    Dataset::new(built.into_iter().collect::<Result<_, _>>()?)
}

fn push_field(out: &mut String, field: &str) {
    if field.contains([',', '"', '\n', '\r']) {
        out.push('"');
        for ch in field.chars() {
            if ch == '"' {
                out.push('"');
            }
            out.push(ch);
        }
        out.push('"');
    } else {
        out.push_str(field);
    }
}

fn push_cell(out: &mut String, cell: &CellValue) {
    match cell {
        CellValue::Number(x) => out.push_str(&format_number(*x)),
        CellValue::Label(s) => push_field(out, s),
        CellValue::Missing => out.push_str(MISSING_TOKEN),
    }
}

/// Serializes with a header row, LF line endings and RFC-4180 quoting.
pub fn serialize_csv(ds: &Dataset) -> String {
    serialize_csv_with(ds, Parallelism::default())
}

pub fn serialize_csv_with(ds: &Dataset, mode: Parallelism) -> String {
    const CHUNK: usize = 4096;
    let mut out = String::new();
    for (j, col) in ds.columns().iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        push_field(&mut out, col.name());
    }
    out.push('\n');
    let starts: Vec<usize> = (0..ds.n_rows()).step_by(CHUNK).collect();
    let chunks = par::map(mode, starts, |start| {
        let end = (start + CHUNK).min(ds.n_rows());
        let mut s = String::new();
        for row in start..end {
            for (j, col) in ds.columns().iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                push_cell(&mut s, &col.cells()[row]);
            }
            s.push('\n');
        }
        s
    });
    for c in chunks {
        out.push_str(&c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_typed_columns() {
        let ds = parse_csv(b"a,b\n1,x\n2,y", true).unwrap();
        assert_eq!(ds.n_rows(), 2);
        let a = ds.column("a").unwrap();
        assert_eq!(a.ctype(), ColumnType::Numeric);
        assert_eq!(a.numbers(), [Some(1.0), Some(2.0)]);
        let b = ds.column("b").unwrap();
        assert_eq!(b.ctype(), ColumnType::Categorical);
        assert_eq!(b.labels(), [Some("x"), Some("y")]);
    }

    #[test]
    fn missing_tokens() {
        let ds = parse_csv(b"a\nNA\n3", true).unwrap();
        let a = ds.column("a").unwrap();
        assert_eq!(a.ctype(), ColumnType::Numeric);
        assert_eq!(a.numbers(), [None, Some(3.0)]);
        let ds = parse_csv(b"a,b\n,1\n2,\n", true).unwrap();
        assert_eq!(ds.column("a").unwrap().numbers(), [None, Some(2.0)]);
        assert_eq!(ds.column("b").unwrap().numbers(), [Some(1.0), None]);
    }

    #[test]
    fn generated_names_without_header() {
        let ds = parse_csv(b"1,x\n2,y\n", false).unwrap();
        assert_eq!(ds.names(), ["c1", "c2"]);
        assert_eq!(ds.n_rows(), 2);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_csv(b"", true), Err(DataError::EmptyInput));
        assert_eq!(parse_csv(b"  \n", true), Err(DataError::EmptyInput));
        assert_eq!(parse_csv(b"a,b\n1,2\n3\n", true), Err(DataError::RaggedRow { row: 3, expected: 2, found: 1 }));
        assert_eq!(parse_csv(b"a,a\n1,2\n", true), Err(DataError::DuplicateName("a".into())));
        assert_eq!(parse_csv(&[0xff, 0xfe, b'\n'], true), Err(DataError::Encoding));
    }

    #[test]
    fn inference_rules() {
        assert_eq!(infer_column_type(&["1", "2.5", "-3e2"]), ColumnType::Numeric);
        assert_eq!(infer_column_type(&["1", "two"]), ColumnType::Categorical);
        assert_eq!(infer_column_type(&["NA", "NA"]), ColumnType::Categorical);
        assert_eq!(infer_column_type(&["inf", "1"]), ColumnType::Categorical);
        assert_eq!(infer_column_type(&[".5", "+2.", "1E+3"]), ColumnType::Numeric);
        assert_eq!(infer_column_type(&["1e", "2"]), ColumnType::Categorical);
        assert_eq!(infer_column_type::<&str>(&[]), ColumnType::Categorical);
    }

    #[test]
    fn overflowing_literal_is_missing() {
        let ds = parse_csv(b"a\n1e999\n2\n", true).unwrap();
        assert_eq!(ds.column("a").unwrap().numbers(), [None, Some(2.0)]);
    }

    #[test]
    fn serialization_rules() {
        let ds = Dataset::new(vec![
            Column::numeric("a", &[Some(1.0)]).unwrap(),
            Column::categorical("b", &[Some("x")]).unwrap(),
        ])
        .unwrap();
        assert_eq!(serialize_csv(&ds), "a,b\n1,x\n");

        let ds = Dataset::new(vec![
            Column::numeric("a", &[None]).unwrap(),
            Column::categorical("b", &[Some("he said \"hi\"")]).unwrap(),
        ])
        .unwrap();
        assert_eq!(serialize_csv(&ds), "a,b\nNA,\"he said \"\"hi\"\"\"\n");
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let mut text = String::from("x,y,z\n");
        for i in 0..10_000 {
            text.push_str(&format!("{},{},g{}\n", i, i as f64 * 0.5, i % 7));
        }
        let a = parse_csv_with(text.as_bytes(), true, Parallelism::Sequential).unwrap();
        let b = parse_csv_with(text.as_bytes(), true, Parallelism::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(serialize_csv_with(&a, Parallelism::Sequential), serialize_csv_with(&a, Parallelism::Parallel));
    }

    proptest! {
        #[test]
        fn inference_is_permutation_invariant(
            raw in proptest::collection::vec(prop_oneof![
                Just("NA".to_string()), Just(String::new()), "-?[0-9]{1,4}(\\.[0-9]{1,3})?", "[a-z]{1,3}"
            ], 0..12),
            seed in any::<u64>(),
        ) {
            let mut shuffled = raw.clone();
            // Deterministic Fisher-Yates keyed by the seed.
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            prop_assert_eq!(infer_column_type(&raw), infer_column_type(&shuffled));
        }
    }
}
