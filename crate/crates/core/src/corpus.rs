//! Column ingestion: NULL filtering, hash-ordered sampling, numeric
//! timestamp classification and file loading.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::locale::Locale;

pub const SAMPLE_SIZE: usize = 32;
pub const ROW_CAP: usize = 100_000;

/// Integer range read as Unix epoch seconds (1973-03-03 through 2096-10-02).
pub const EPOCH_SECONDS: (f64, f64) = (1e8, 4e9);
pub const EPOCH_MILLIS: (f64, f64) = (1e11, 4e12);
/// Excel serial day numbers, 1900-01-01 through roughly 2119.
pub const EXCEL_SERIAL: (f64, f64) = (1.0, 80_000.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TimestampClass {
    NotNumeric,
    UnixEpochSeconds,
    UnixEpochMillis,
    ExcelSerial,
    PlainNumber,
}

impl TimestampClass {
    /// Classes excluded from format detection.
    pub fn is_timestamp(self) -> bool {
        matches!(
            self,
            TimestampClass::UnixEpochSeconds | TimestampClass::UnixEpochMillis | TimestampClass::ExcelSerial
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ColumnStats {
    pub non_null_count: usize,
    pub distinct_count: usize,
    /// In characters.
    pub max_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSample {
    pub column_name: String,
    /// Rows read, after the row cap.
    pub raw_count: usize,
    /// Distinct non-null values in first-seen order.
    pub non_null_values: Vec<String>,
    pub sample: Vec<String>,
    pub stats: ColumnStats,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error("column not found: {0}")]
    ColumnNotFound(String),
    #[error("column {0} is empty after filtering")]
    EmptyAfterFiltering(String),
    #[error("column {column} holds numeric timestamps ({class:?})")]
    NumericTimestampColumn { column: String, class: TimestampClass },
}

/// Column selector: a header name, or a zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    Name(String),
    Index(usize),
}

impl Selector {
    /// Digits select by index, anything else by name.
    pub fn parse(text: &str) -> Selector {
        match text.parse() {
            Ok(i) => Selector::Index(i),
            Err(_) => Selector::Name(text.to_string()),
        }
    }
}

const NULL_ENCODINGS: [&str; 2] = ["0000-00-00", "NaN"];

fn is_null_like(value: &str, locale: &Locale) -> bool {
    value.eq_ignore_ascii_case("null")
        || NULL_ENCODINGS.iter().any(|n| value.eq_ignore_ascii_case(n))
        || (!value.chars().any(|c| c.is_ascii_digit()) && !locale.contains_calendar_word(value))
}

pub fn filter_nulls<S: AsRef<str>>(values: &[S], locale: &Locale) -> Vec<String> {
    values
        .iter()
        .map(AsRef::as_ref)
        .filter(|v| !is_null_like(v, locale))
        .map(str::to_string)
        .collect()
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Distinct values ordered by hash (then text), first `k` kept.
pub fn sample_column<S: AsRef<str>>(values: &[S], k: usize) -> Vec<String> {
    assert!(k >= 1, "sample size must be positive");
    let distinct: HashSet<&str> = values.iter().map(AsRef::as_ref).collect();
    let mut keyed: Vec<(u64, &str)> = distinct.into_iter().map(|v| (fnv1a64(v.as_bytes()), v)).collect();
    keyed.sort_unstable();
    keyed.into_iter().take(k).map(|(_, v)| v.to_string()).collect()
}

enum Numeric {
    Integer { value: f64, leading_zero: bool },
    Decimal { value: f64, leading_zero: bool },
    Signed,
}

fn numeric(text: &str) -> Option<Numeric> {
    let (signed, body) = match text.strip_prefix(['+', '-']) {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return None;
    }
    if signed {
        return Some(Numeric::Signed);
    }
    let value: f64 = body.parse().ok()?;
    let leading_zero = int.len() > 1 && int.starts_with('0');
    Some(match frac {
        Some(_) => Numeric::Decimal { value, leading_zero },
        None => Numeric::Integer { value, leading_zero },
    })
}

/// Classifies the whole value set. A timestamp class needs every value in
/// its range; zero-padded numbers never qualify.
pub fn classify_timestamps<S: AsRef<str>>(values: &[S]) -> TimestampClass {
    if values.is_empty() {
        return TimestampClass::NotNumeric;
    }
    let mut parsed = Vec::with_capacity(values.len());
    for v in values {
        match numeric(v.as_ref()) {
            Some(n) => parsed.push(n),
            None => return TimestampClass::NotNumeric,
        }
    }
    let within = |(lo, hi): (f64, f64), allow_decimal: bool| {
        parsed.iter().all(|n| match *n {
            Numeric::Integer { value, leading_zero } => !leading_zero && (lo..=hi).contains(&value),
            Numeric::Decimal { value, leading_zero } => allow_decimal && !leading_zero && (lo..=hi).contains(&value),
            Numeric::Signed => false,
        })
    };
    if within(EPOCH_SECONDS, false) {
        TimestampClass::UnixEpochSeconds
    } else if within(EPOCH_MILLIS, false) {
        TimestampClass::UnixEpochMillis
    } else if within(EXCEL_SERIAL, true) {
        TimestampClass::ExcelSerial
    } else {
        TimestampClass::PlainNumber
    }
}

/// Builds a sample from raw cell values. Values are trimmed first.
pub fn column_from_values<S: AsRef<str>>(
    name: &str,
    values: &[S],
    locale: &Locale,
    k: usize,
) -> Result<ColumnSample, CorpusError> {
    let capped = &values[..values.len().min(ROW_CAP)];
    let trimmed: Vec<&str> = capped.iter().map(|v| v.as_ref().trim()).collect();
    let kept = filter_nulls(&trimmed, locale);
    if kept.is_empty() {
        return Err(CorpusError::EmptyAfterFiltering(name.to_string()));
    }
    let class = classify_timestamps(&kept);
    if class.is_timestamp() {
        return Err(CorpusError::NumericTimestampColumn {
            column: name.to_string(),
            class,
        });
    }
    let mut seen = HashSet::new();
    let distinct: Vec<String> = kept.iter().filter(|v| seen.insert(v.as_str())).cloned().collect();
    let stats = ColumnStats {
        non_null_count: kept.len(),
        distinct_count: distinct.len(),
        max_length: kept.iter().map(|v| v.chars().count()).max().unwrap_or(0),
    };
    Ok(ColumnSample {
        column_name: name.to_string(),
        raw_count: capped.len(),
        sample: sample_column(&distinct, k),
        non_null_values: distinct,
        stats,
    })
}

/// Extracts one column's raw cells from file bytes: CSV with a header row,
/// or one value per line.
pub fn read_column(
    bytes: &[u8],
    csv_input: bool,
    default_name: &str,
    selector: Option<&Selector>,
) -> Result<(String, Vec<String>), CorpusError> {
    if !csv_input {
        if let Some(s) = selector {
            if *s != Selector::Index(0) && *s != Selector::Name(default_name.to_string()) {
                return Err(CorpusError::ColumnNotFound(describe(s)));
            }
        }
        let text = String::from_utf8_lossy(bytes);
        let values = text.lines().take(ROW_CAP).map(str::to_string).collect();
        return Ok((default_name.to_string(), values));
    }
    let csv_err = |e: csv::Error| CorpusError::Csv {
        path: default_name.to_string(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let index = match selector {
        None => 0,
        Some(Selector::Name(n)) => headers
            .iter()
            .position(|h| h.trim() == n)
            .ok_or_else(|| CorpusError::ColumnNotFound(n.clone()))?,
        Some(Selector::Index(i)) => {
            if *i < headers.len() {
                *i
            } else if let Some(p) = headers.iter().position(|h| h.trim() == i.to_string()) {
                p
            } else {
                return Err(CorpusError::ColumnNotFound(i.to_string()));
            }
        }
    };
    if index >= headers.len() {
        return Err(CorpusError::ColumnNotFound("0".into()));
    }
    let name = headers[index].trim().to_string();
    let mut values = Vec::new();
    for record in reader.records().take(ROW_CAP) {
        let record = record.map_err(csv_err)?;
        values.push(record.get(index).unwrap_or("").to_string());
    }
    Ok((name, values))
}

fn describe(s: &Selector) -> String {
    match s {
        Selector::Name(n) => n.clone(),
        Selector::Index(i) => i.to_string(),
    }
}

/// Reads `path` (CSV when the extension is `.csv`, else newline-delimited
/// text) and prepares the selected column.
pub fn load_column(
    path: &Path,
    selector: Option<&Selector>,
    locale: &Locale,
    k: usize,
) -> Result<ColumnSample, CorpusError> {
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let csv_input = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (name, values) = read_column(&bytes, csv_input, &stem, selector).map_err(|e| match e {
        CorpusError::Csv { message, .. } => CorpusError::Csv {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })?;
    column_from_values(&name, &values, locale, k)
}
