//! Seeded synthetic corpus: one single-column CSV per generated column plus
//! a manifest naming each column's true format.

use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calendar::days_in_month_bound;
use crate::dateparse::{format_instant, ResolvedInstant, ZONE_NAMES};
use crate::icu::{tokenize_format, FieldLetter, FormatString};
use crate::locale::Locale;

pub const VALUES_PER_COLUMN: usize = 50;
pub const HEADER: &str = "date";
pub const MANIFEST: &str = "manifest.json";
pub const YEARS: (i32, i32) = (1985, 2035);

/// English formats the generator draws from. The first five are the unusual
/// layouts the detectors are expected to recover.
pub const CATALOG: &[&str] = &[
    "EEE MMM dd HH:mm:ss zzz yyyy",
    "[dd/MMM/yyyy:HH:mm:ss",
    "dd-MMM-yy hh.mm.ss.SSSSSS a",
    "MM ''yyyy",
    "MM/dd/yyyy - HH:mm",
    "yyyy-MM-dd",
    "yyyy/MM/dd",
    "yyyy.MM.dd",
    "yyyyMMdd",
    "MM/dd/yyyy",
    "M/d/yyyy",
    "dd/MM/yyyy",
    "d/M/yyyy",
    "dd.MM.yyyy",
    "dd-MM-yyyy",
    "MM-dd-yyyy",
    "MM/dd/yy",
    "dd/MM/yy",
    "yyyy-MM-dd HH:mm:ss",
    "yyyy-MM-dd'T'HH:mm:ss",
    "yyyy-MM-dd'T'HH:mm:ss.SSS",
    "yyyy-MM-dd'T'HH:mm:ssZZZZZ",
    "yyyy-MM-dd HH:mm:ss Z",
    "yyyy-MM-dd HH:mm",
    "MM/dd/yyyy HH:mm:ss",
    "M/d/yyyy h:mm a",
    "dd/MM/yyyy HH:mm",
    "MMM d, yyyy",
    "MMMM d, yyyy",
    "d MMM yyyy",
    "d MMMM yyyy",
    "dd MMM yyyy",
    "dd-MMM-yyyy",
    "EEE, dd MMM yyyy HH:mm:ss Z",
    "EEEE, MMMM d, yyyy",
    "EEE MMM d yyyy",
    "MMM dd, yyyy HH:mm",
    "dd MMMM yyyy HH:mm",
    "MMM yyyy",
    "MMMM yyyy",
    "yyyy-MM",
    "MM/yyyy",
    "QQQ yyyy",
    "HH:mm:ss",
    "HH:mm",
    "h:mm a",
    "hh:mm:ss a",
    "HH:mm:ss.SSS",
    "yyyy-MM-dd HH:mm:ss zzz",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub column: String,
    pub format: String,
    pub locale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub columns: Vec<ManifestEntry>,
}

/// A generated column: its format and values.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthColumn {
    pub format: FormatString,
    pub values: Vec<String>,
}

pub fn random_instant(rng: &mut impl Rng, fs: &FormatString) -> ResolvedInstant {
    let year = rng.gen_range(YEARS.0..=YEARS.1);
    let month = rng.gen_range(1..=12u32);
    let day = rng.gen_range(1..=days_in_month_bound(month, year));
    let zoned = fs.has_letter(FieldLetter::ZoneName) || fs.has_letter(FieldLetter::ZoneOffset);
    let tz_offset_minutes = if !zoned {
        None
    } else if fs.has_letter(FieldLetter::ZoneName) {
        Some(ZONE_NAMES[rng.gen_range(0..ZONE_NAMES.len())].1)
    } else {
        Some(rng.gen_range(-48..=56i16) * 15)
    };
    ResolvedInstant {
        year,
        month: month as u8,
        day: day as u8,
        hour: rng.gen_range(0..24),
        minute: rng.gen_range(0..60),
        second: rng.gen_range(0..60),
        millisecond: rng.gen_range(0..1000),
        tz_offset_minutes,
        has_fraction: fs.has_letter(FieldLetter::Fraction),
    }
}

/// Column `index` of the corpus for `seed`. Each column has its own stream,
/// so generating a prefix of the corpus gives the same columns.
pub fn generate_column(seed: u64, index: usize, locale: &Locale) -> SynthColumn {
    let pattern = CATALOG[index % CATALOG.len()];
    let format = tokenize_format(pattern).expect("catalog patterns tokenize");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index as u64);
    let values = (0..VALUES_PER_COLUMN)
        .map(|_| format_instant(&random_instant(&mut rng, &format), &format, locale))
        .collect();
    SynthColumn { format, values }
}

pub fn column_file_name(index: usize) -> String {
    format!("col_{index:04}.csv")
}

fn csv_bytes(values: &[String]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([HEADER])?;
    for v in values {
        w.write_record([v])?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

/// Writes `n_columns` CSV files and the manifest into `out_dir`.
pub fn write_corpus(out_dir: &Path, n_columns: usize, seed: u64) -> io::Result<Manifest> {
    let locale = Locale::english();
    fs::create_dir_all(out_dir)?;
    let mut columns = Vec::with_capacity(n_columns);
    for i in 0..n_columns {
        let col = generate_column(seed, i, &locale);
        let file = column_file_name(i);
        fs::write(out_dir.join(&file), csv_bytes(&col.values)?)?;
        columns.push(ManifestEntry {
            file,
            column: HEADER.to_string(),
            format: col.format.to_string(),
            locale: locale.id().to_string(),
        });
    }
    let manifest = Manifest { seed, columns };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(out_dir.join(MANIFEST), json)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> io::Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    serde_json::from_str(&text).map_err(io::Error::other)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dateparse::dateparse;

    #[test]
    fn catalog_is_large_and_tokenizes() {
        assert!(CATALOG.len() >= 40);
        for p in CATALOG {
            let fs = tokenize_format(p).unwrap();
            assert_eq!(fs.to_string(), *p);
        }
    }

    #[test]
    fn generated_values_parse_under_their_format() {
        let en = Locale::english();
        for i in 0..CATALOG.len() {
            let col = generate_column(7, i, &en);
            assert_eq!(col.values.len(), VALUES_PER_COLUMN);
            for v in &col.values {
                assert!(dateparse(v, &col.format, &en).is_ok(), "{v} under {}", col.format);
            }
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = write_corpus(a.path(), 10, 1).unwrap();
        let mb = write_corpus(b.path(), 10, 1).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(ma.columns.len(), 10);
        for e in &ma.columns {
            assert_eq!(fs::read(a.path().join(&e.file)).unwrap(), fs::read(b.path().join(&e.file)).unwrap());
            assert!(tokenize_format(&e.format).is_ok());
        }
        assert_eq!(fs::read(a.path().join(MANIFEST)).unwrap(), fs::read(b.path().join(MANIFEST)).unwrap());
        assert_eq!(read_manifest(a.path()).unwrap(), ma);
    }
}
