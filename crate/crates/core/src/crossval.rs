//! Runs both engines over a directory of columns and compares their top
//! formats.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{column_from_values, read_column, ColumnSample, CorpusError, Selector, TimestampClass, SAMPLE_SIZE};
use crate::detection::{DetectOptions, DetectionResult, Engine};
pub use crate::icu::normalize_for_comparison;
use crate::locale::Locale;
use crate::mdl::MdlDetector;
use crate::pcfg::NlpDetector;

/// Stand-in format MDL reports for spreadsheet serial-number columns.
pub const EXCEL_SERIAL_FORMAT: &str = "excel-serial";

const SEASONS: [&str; 5] = ["spring", "summer", "fall", "autumn", "winter"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DiscrepancyCategory {
    LeadingSignNumeric,
    ExcelDateSupport,
    SeasonalExpression,
    NumericDateVsTime,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub column: String,
    pub mdl_format: Option<String>,
    pub nlp_format: Option<String>,
    pub category: DiscrepancyCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnFailure {
    pub column: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossvalReport {
    pub total_columns: usize,
    /// Columns both engines were run on.
    pub both_detected: usize,
    pub match_count: usize,
    pub match_rate: f64,
    pub discrepancies: Vec<Discrepancy>,
    /// Columns that could not be loaded.
    pub column_errors: Vec<ColumnFailure>,
}

#[derive(Debug, Error)]
pub enum CrossvalError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("no columns found in {0}")]
    NoColumns(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusOptions {
    pub detect: DetectOptions,
    pub sample_size: usize,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for CorpusOptions {
    fn default() -> CorpusOptions {
        CorpusOptions {
            detect: DetectOptions::default(),
            sample_size: SAMPLE_SIZE,
            jobs: 0,
        }
    }
}

/// One column of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnRef {
    pub path: PathBuf,
    pub index: usize,
    /// `file:header`
    pub label: String,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CrossvalError + '_ {
    move |source| CrossvalError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Every column of every `.csv` and `.txt` file directly under `dir`, by
/// file name then column position.
pub fn corpus_columns(dir: &Path) -> Result<Vec<ColumnRef>, CrossvalError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("csv") || e.eq_ignore_ascii_case("txt"))
        })
        .collect();
    files.sort();
    let mut out = Vec::new();
    for path in files {
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let headers: Vec<String> = if is_csv {
            let mut r = csv::ReaderBuilder::new().flexible(true).from_path(&path).map_err(|e| CrossvalError::Io {
                path: path.display().to_string(),
                source: io::Error::other(e.to_string()),
            })?;
            match r.headers() {
                Ok(h) => h.iter().map(|s| s.trim().to_string()).collect(),
                Err(_) => vec![String::new()],
            }
        } else {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            vec![stem]
        };
        for (index, h) in headers.into_iter().enumerate() {
            out.push(ColumnRef {
                label: format!("{file}:{h}"),
                path: path.clone(),
                index,
            });
        }
    }
    if out.is_empty() {
        return Err(CrossvalError::NoColumns(dir.display().to_string()));
    }
    Ok(out)
}

/// Loads one corpus column.
pub fn load_ref(col: &ColumnRef, locale: &Locale, sample_size: usize) -> Result<(ColumnSample, Vec<String>), CorpusError> {
    let bytes = fs::read(&col.path).map_err(|source| CorpusError::Io {
        path: col.path.display().to_string(),
        source,
    })?;
    let is_csv = col.path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let stem = col.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (name, values) = read_column(&bytes, is_csv, &stem, Some(&Selector::Index(col.index)))?;
    let sample = column_from_values(&name, &values, locale, sample_size)?;
    Ok((sample, values))
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Assigns a category to a disagreement from the column's raw values.
pub fn categorize<S: AsRef<str>>(values: &[S], mdl_format: Option<&str>) -> DiscrepancyCategory {
    let vals: Vec<&str> = values.iter().map(|v| v.as_ref().trim()).filter(|v| !v.is_empty()).collect();
    if mdl_format == Some(EXCEL_SERIAL_FORMAT) {
        return DiscrepancyCategory::ExcelDateSupport;
    }
    let signed = |v: &str| {
        let mut cs = v.chars();
        matches!(cs.next(), Some('+' | '-')) && cs.next().is_some_and(|c| c.is_ascii_digit())
    };
    if vals.iter().any(|v| signed(v)) {
        return DiscrepancyCategory::LeadingSignNumeric;
    }
    let seasonal = |v: &str| {
        v.split(|c: char| !c.is_alphabetic())
            .any(|w| SEASONS.iter().any(|s| w.eq_ignore_ascii_case(s)))
    };
    if vals.iter().any(|v| seasonal(v)) {
        return DiscrepancyCategory::SeasonalExpression;
    }
    if !vals.is_empty() && vals.iter().all(|v| v.bytes().all(|b| b.is_ascii_digit())) {
        return DiscrepancyCategory::NumericDateVsTime;
    }
    DiscrepancyCategory::Other
}

enum Outcome {
    Compared {
        mdl: Option<String>,
        nlp: Option<String>,
        values: Vec<String>,
    },
    Failed(String),
}

fn top_text(r: &Result<DetectionResult, crate::detection::DetectError>) -> Option<String> {
    r.as_ref().ok().and_then(|d| d.top()).map(|c| normalize_for_comparison(&c.format))
}

/// Compares the engines' top-1 formats on every column under `dir`.
pub fn cross_validate(dir: &Path, locale: &Locale, options: &CorpusOptions) -> Result<CrossvalReport, CrossvalError> {
    let mdl = MdlDetector::new(locale, options.detect);
    let nlp = NlpDetector::new(locale, options.detect);
    cross_validate_with(dir, locale, &mdl, &nlp, options)
}

/// [`cross_validate`] with caller-built detectors, e.g. an NLP detector with
/// trained weights.
pub fn cross_validate_with(
    dir: &Path,
    locale: &Locale,
    mdl: &MdlDetector,
    nlp: &NlpDetector,
    options: &CorpusOptions,
) -> Result<CrossvalReport, CrossvalError> {
    let columns = corpus_columns(dir)?;
    let outcomes: Vec<Outcome> = with_pool(options.jobs, || {
        columns
            .par_iter()
            .map(|col| match load_ref(col, locale, options.sample_size) {
                Ok((sample, _)) => Outcome::Compared {
                    mdl: top_text(&mdl.detect(&sample)),
                    nlp: top_text(&nlp.detect(&sample)),
                    values: sample.non_null_values,
                },
                Err(CorpusError::NumericTimestampColumn {
                    class: TimestampClass::ExcelSerial,
                    ..
                }) => Outcome::Compared {
                    mdl: Some(EXCEL_SERIAL_FORMAT.to_string()),
                    nlp: None,
                    values: Vec::new(),
                },
                Err(e) => Outcome::Failed(e.to_string()),
            })
            .collect()
    });
    let mut report = CrossvalReport {
        total_columns: columns.len(),
        both_detected: 0,
        match_count: 0,
        match_rate: 0.0,
        discrepancies: Vec::new(),
        column_errors: Vec::new(),
    };
    for (col, outcome) in columns.iter().zip(outcomes) {
        match outcome {
            Outcome::Failed(error) => report.column_errors.push(ColumnFailure {
                column: col.label.clone(),
                error,
            }),
            Outcome::Compared { mdl, nlp, values } => {
                report.both_detected += 1;
                if mdl.is_some() && mdl == nlp {
                    report.match_count += 1;
                } else {
                    let category = if mdl.is_some() && nlp.is_some() {
                        categorize(&values, mdl.as_deref())
                    } else if mdl.as_deref() == Some(EXCEL_SERIAL_FORMAT) {
                        DiscrepancyCategory::ExcelDateSupport
                    } else if mdl.is_none() && nlp.is_none() {
                        categorize(&values, None)
                    } else {
                        DiscrepancyCategory::Other
                    };
                    report.discrepancies.push(Discrepancy {
                        column: col.label.clone(),
                        mdl_format: mdl,
                        nlp_format: nlp,
                        category,
                    });
                }
            }
        }
    }
    if report.both_detected > 0 {
        report.match_rate = report.match_count as f64 / report.both_detected as f64;
    }
    Ok(report)
}

/// Timing and error summary of one engine over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    /// Columns loaded.
    pub records: usize,
    /// Share of loaded columns with no zero-error format.
    pub error_rate: f64,
    /// Mean analysis time per sample.
    pub analysis_micros: f64,
    /// Mean validation time per value checked.
    pub validation_micros: f64,
    pub median_not_null: f64,
}

fn median(mut xs: Vec<usize>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2] as f64
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) as f64 / 2.0
    }
}

pub fn corpus_stats(dir: &Path, engine: Engine, locale: &Locale, options: &CorpusOptions) -> Result<CorpusStats, CrossvalError> {
    let mdl = MdlDetector::new(locale, options.detect);
    let nlp = NlpDetector::new(locale, options.detect);
    corpus_stats_with(dir, engine, locale, &mdl, &nlp, options)
}

pub fn corpus_stats_with(
    dir: &Path,
    engine: Engine,
    locale: &Locale,
    mdl: &MdlDetector,
    nlp: &NlpDetector,
    options: &CorpusOptions,
) -> Result<CorpusStats, CrossvalError> {
    let columns = corpus_columns(dir)?;
    // Timings are taken one column at a time so they are not inflated by
    // contention.
    let rows: Vec<(usize, bool, f64, f64)> = columns
        .iter()
        .filter_map(|col| {
            let (sample, _) = load_ref(col, locale, options.sample_size).ok()?;
            let result = match engine {
                Engine::Mdl => mdl.detect(&sample),
                Engine::Nlp => nlp.detect(&sample),
            };
            let (ok, a, v) = match &result {
                Ok(r) => (
                    r.top().is_some_and(|c| c.error_rate == 0.0),
                    r.timing.analysis_micros,
                    r.timing.validation_micros,
                ),
                Err(_) => (false, 0.0, 0.0),
            };
            Some((sample.stats.non_null_count, ok, a, v))
        })
        .collect();
    if rows.is_empty() {
        return Err(CrossvalError::NoColumns(dir.display().to_string()));
    }
    let n = rows.len() as f64;
    Ok(CorpusStats {
        records: rows.len(),
        error_rate: rows.iter().filter(|r| !r.1).count() as f64 / n,
        analysis_micros: rows.iter().map(|r| r.2).sum::<f64>() / n,
        validation_micros: rows.iter().map(|r| r.3).sum::<f64>() / n,
        median_not_null: median(rows.iter().map(|r| r.0).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::icu::tokenize_format;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn normalization() {
        let n = |p: &str| normalize_for_comparison(&tokenize_format(p).unwrap());
        assert_eq!(n("yyyy-MM-dd"), n("yyyy-MM-dd"));
        assert_ne!(n("MMyyyy"), n("HHmmss"));
        assert_eq!(n("MM/dd/yyyy - HH:mm"), "MM/dd/yyyy - HH:mm");
    }

    #[test]
    fn categories() {
        assert_eq!(categorize(&["Fall 2000", "Spring 2000"], None), DiscrepancyCategory::SeasonalExpression);
        assert_eq!(categorize(&["012014", "112015"], Some("MMyyyy")), DiscrepancyCategory::NumericDateVsTime);
        assert_eq!(categorize(&["+2014", "-2015"], None), DiscrepancyCategory::LeadingSignNumeric);
        assert_eq!(categorize(&["42689.5"], Some(EXCEL_SERIAL_FORMAT)), DiscrepancyCategory::ExcelDateSupport);
        assert_eq!(categorize(&["x1"], None), DiscrepancyCategory::Other);
    }

    #[test]
    fn single_agreeing_column() {
        let d = tempfile::tempdir().unwrap();
        write(d.path(), "a.csv", "date\n2014-01-02\n2015-11-30\n2013-07-19\n");
        let r = cross_validate(d.path(), &Locale::english(), &CorpusOptions::default()).unwrap();
        assert_eq!(r.total_columns, 1);
        assert_eq!(r.match_rate, 1.0);
        assert!(r.discrepancies.is_empty());
    }

    #[test]
    fn seasonal_and_excel_columns() {
        let d = tempfile::tempdir().unwrap();
        write(d.path(), "season.csv", "term\nFall 2000\nSpring 2000\nFall 2001\n");
        write(d.path(), "serial.csv", "when\n42689.5\n42690.25\n42701\n");
        let r = cross_validate(d.path(), &Locale::english(), &CorpusOptions::default()).unwrap();
        assert_eq!(r.both_detected, 2);
        assert_eq!(r.match_count + r.discrepancies.len(), r.both_detected);
        let cat = |c: &str| r.discrepancies.iter().find(|x| x.column == c).map(|x| x.category);
        assert_eq!(cat("season.csv:term"), Some(DiscrepancyCategory::SeasonalExpression));
        assert_eq!(cat("serial.csv:when"), Some(DiscrepancyCategory::ExcelDateSupport));
    }

    #[test]
    fn empty_dir_is_an_error() {
        let d = tempfile::tempdir().unwrap();
        assert!(matches!(
            cross_validate(d.path(), &Locale::english(), &CorpusOptions::default()),
            Err(CrossvalError::NoColumns(_))
        ));
    }

    #[test]
    fn stats_schema() {
        let d = tempfile::tempdir().unwrap();
        write(d.path(), "a.csv", "date\n2014-01-02\n2015-11-30\n2013-07-19\n");
        let s = corpus_stats(d.path(), Engine::Mdl, &Locale::english(), &CorpusOptions::default()).unwrap();
        assert_eq!(s.records, 1);
        assert_eq!(s.error_rate, 0.0);
        assert!(s.analysis_micros >= 0.0 && s.validation_micros >= 0.0);
        assert_eq!(s.median_not_null, 3.0);
    }
}
