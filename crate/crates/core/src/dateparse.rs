//! Applying a [`FormatString`] to value text, and formatting instants back.
//!
//! Parsing walks the pattern tokens left to right. Numeric fields are read
//! greedily up to their width and backtrack to shorter runs when the rest of
//! the input cannot be matched, so `MM/dd` also accepts `5/6`. The whole
//! input must be consumed.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::calendar::{days_in_month_bound, max_days_in_month, weekday};
use crate::icu::{FieldCode, FieldLetter, FormatString, FormatToken};
use crate::locale::{loose_prefix, Locale, Meridian, WordForm, WordMatch};

/// Time zone abbreviations accepted by `zzz`. The first name listed for an
/// offset is used when formatting.
pub const ZONE_NAMES: &[(&str, i16)] = &[
    ("GMT", 0),
    ("UTC", 0),
    ("EST", -300),
    ("EDT", -240),
    ("CST", -360),
    ("CDT", -300),
    ("MST", -420),
    ("MDT", -360),
    ("PST", -480),
    ("PDT", -420),
    ("BST", 60),
    ("CET", 60),
    ("CEST", 120),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    LiteralMismatch,
    FieldOutOfRange,
    TrailingInput,
    IncompleteInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{kind:?} at byte {offset} (pattern token {token})")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the value text.
    pub offset: usize,
    /// Index of the pattern token being matched; equals the token count for
    /// trailing input.
    pub token: usize,
}

/// A partially specified date-time. `None` fields were not parsed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct DateTimeValue {
    pub year: Option<i32>,
    pub month: Option<u8>,
    pub day: Option<u8>,
    /// 0 through 23, after combining a 12-hour field with its marker.
    pub hour: Option<u8>,
    pub minute: Option<u8>,
    pub second: Option<u8>,
    pub millisecond: Option<u16>,
    pub tz_offset_minutes: Option<i16>,
    pub quarter: Option<u8>,
    pub weekday: Option<u8>,
    /// A meridian spelling ICU itself would not accept ("p.m.") was used.
    pub lossy: bool,
}

impl DateTimeValue {
    pub fn has_date_part(&self) -> bool {
        self.year.is_some() || self.month.is_some() || self.day.is_some() || self.quarter.is_some()
    }
}

/// A fully defaulted instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResolvedInstant {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    pub hour: u8,
    pub minute: u8,
    pub second: u8,
    pub millisecond: u16,
    pub tz_offset_minutes: Option<i16>,
    /// The millisecond came from the input rather than a default.
    pub has_fraction: bool,
}

impl ResolvedInstant {
    pub fn to_value(&self) -> DateTimeValue {
        DateTimeValue {
            year: Some(self.year),
            month: Some(self.month),
            day: Some(self.day),
            hour: Some(self.hour),
            minute: Some(self.minute),
            second: Some(self.second),
            millisecond: self.has_fraction.then_some(self.millisecond),
            tz_offset_minutes: self.tz_offset_minutes,
            ..DateTimeValue::default()
        }
    }
}

impl fmt::Display for ResolvedInstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}",
            self.year, self.month, self.day, self.hour, self.minute, self.second
        )?;
        if self.has_fraction {
            write!(f, ".{:03}", self.millisecond)?;
        }
        if let Some(off) = self.tz_offset_minutes {
            let sign = if off < 0 { '-' } else { '+' };
            let abs = off.unsigned_abs();
            write!(f, "{sign}{:02}:{:02}", abs / 60, abs % 60)?;
        }
        Ok(())
    }
}

pub fn apply_defaults(v: &DateTimeValue) -> ResolvedInstant {
    let (year, month, day) = if v.has_date_part() {
        let month = v
            .month
            .or_else(|| v.quarter.map(|q| (q - 1) * 3 + 1))
            .unwrap_or(1);
        (v.year.unwrap_or(2000), month, v.day.unwrap_or(1))
    } else {
        (1899, 12, 30)
    };
    ResolvedInstant {
        year,
        month,
        day,
        hour: v.hour.unwrap_or(0),
        minute: v.minute.unwrap_or(0),
        second: v.second.unwrap_or(0),
        millisecond: v.millisecond.unwrap_or(0),
        tz_offset_minutes: v.tz_offset_minutes,
        has_fraction: v.millisecond.is_some(),
    }
}

pub fn dateparse(value: &str, fs: &FormatString, locale: &Locale) -> Result<DateTimeValue, ParseError> {
    Parser {
        input: value,
        tokens: fs.tokens(),
        locale,
    }
    .step(0, 0, State::default())
}

/// Fraction of `values` that fail to parse under `fs`.
pub fn column_error_rate<S: AsRef<str>>(values: &[S], fs: &FormatString, locale: &Locale) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let failures = values
        .iter()
        .filter(|v| dateparse(v.as_ref(), fs, locale).is_err())
        .count();
    failures as f64 / values.len() as f64
}

#[derive(Debug, Clone, Copy, Default)]
struct State {
    v: DateTimeValue,
    hour12: Option<u8>,
    meridian: Option<Meridian>,
    day_at: (usize, usize),
}

#[derive(Debug, Clone, Copy)]
enum Update {
    Year(i32),
    Month(u8),
    Day(u8),
    Hour24(u8),
    Hour12(u8),
    Minute(u8),
    Second(u8),
    Millis(u16),
    Zone(i16),
    Quarter(u8),
    Weekday(u8),
    Meridian(Meridian, bool),
}

struct Parser<'a> {
    input: &'a str,
    tokens: &'a [FormatToken],
    locale: &'a Locale,
}

impl Parser<'_> {
    fn err(&self, kind: ParseErrorKind, offset: usize, token: usize) -> ParseError {
        let kind = if offset >= self.input.len() && kind != ParseErrorKind::TrailingInput {
            ParseErrorKind::IncompleteInput
        } else {
            kind
        };
        ParseError { kind, offset, token }
    }

    fn step(&self, ti: usize, pos: usize, st: State) -> Result<DateTimeValue, ParseError> {
        let Some(token) = self.tokens.get(ti) else {
            if pos != self.input.len() {
                return Err(self.err(ParseErrorKind::TrailingInput, pos, ti));
            }
            return self.finish(st);
        };
        match token {
            FormatToken::Literal(text) => {
                if self.input[pos..].starts_with(text.as_str()) {
                    self.step(ti + 1, pos + text.len(), st)
                } else {
                    Err(self.err(ParseErrorKind::LiteralMismatch, pos, ti))
                }
            }
            FormatToken::Field(fc) => {
                let here = self.err(ParseErrorKind::FieldOutOfRange, pos, ti);
                let candidates = self.field_candidates(*fc, pos);
                // Report the greedy reading's failure, unless the longest
                // digit run was itself out of range.
                let mut first = (self.longest_run_rejected(*fc, pos, &candidates)).then_some(here);
                for (len, update) in candidates {
                    let mut next = st;
                    apply(&mut next, update);
                    if matches!(update, Update::Day(_)) {
                        next.day_at = (pos, ti);
                    }
                    match self.step(ti + 1, pos + len, next) {
                        Ok(v) => return Ok(v),
                        Err(e) => {
                            first.get_or_insert(e);
                        }
                    }
                }
                Err(first.unwrap_or(here))
            }
        }
    }

    fn finish(&self, st: State) -> Result<DateTimeValue, ParseError> {
        let mut v = st.v;
        if let Some(h) = st.hour12 {
            let base = h % 12;
            v.hour = Some(match st.meridian {
                Some(Meridian::Pm) => base + 12,
                _ => base,
            });
        }
        if let (Some(m), Some(d)) = (v.month, v.day) {
            let bound = match v.year {
                Some(y) => days_in_month_bound(u32::from(m), y),
                None => max_days_in_month(u32::from(m)),
            };
            if u32::from(d) > bound {
                let (offset, token) = st.day_at;
                return Err(ParseError {
                    kind: ParseErrorKind::FieldOutOfRange,
                    offset,
                    token,
                });
            }
        }
        Ok(v)
    }

    fn longest_run_rejected(&self, fc: FieldCode, pos: usize, candidates: &[(usize, Update)]) -> bool {
        if fc.is_textual() || matches!(fc.letter(), FieldLetter::ZoneName | FieldLetter::ZoneOffset) {
            return false;
        }
        let avail = self.digit_run(pos, fc.width().max(2));
        avail > 0 && candidates.first().is_none_or(|c| c.0 < avail)
    }

    fn digit_run(&self, pos: usize, max: usize) -> usize {
        self.input.as_bytes()[pos..]
            .iter()
            .take(max)
            .take_while(|b| b.is_ascii_digit())
            .count()
    }

    /// Numeric candidates, longest first.
    fn numeric(
        &self,
        pos: usize,
        min_len: usize,
        max_len: usize,
        range: (u32, u32),
        make: impl Fn(u32, usize) -> Update,
    ) -> Vec<(usize, Update)> {
        let avail = self.digit_run(pos, max_len);
        (min_len..=avail)
            .rev()
            .filter_map(|len| {
                let n: u32 = self.input[pos..pos + len].parse().ok()?;
                (range.0..=range.1).contains(&n).then(|| (len, make(n, len)))
            })
            .collect()
    }

    fn words(found: Vec<WordMatch>, form: Option<WordForm>, make: impl Fn(&WordMatch) -> Update) -> Vec<(usize, Update)> {
        let mut out: Vec<(usize, Update)> = found
            .iter()
            .filter(|m| form.is_none_or(|f| f == m.form))
            .map(|m| (m.len, make(m)))
            .collect();
        out.sort_by_key(|e| std::cmp::Reverse(e.0));
        out
    }

    fn field_candidates(&self, fc: FieldCode, pos: usize) -> Vec<(usize, Update)> {
        use FieldLetter::*;
        let rest = &self.input[pos..];
        let w = fc.width();
        match fc.letter() {
            Year if w == 2 => self.numeric(pos, 2, 2, (0, 99), |n, _| Update::Year(pivot_two_digit_year(n))),
            Year => self.numeric(pos, 4, 4, (0, 9999), |n, _| Update::Year(n as i32)),
            Quarter if w <= 2 => self.numeric(pos, 1, 2, (1, 4), |n, _| Update::Quarter(n as u8)),
            Quarter => {
                let form = if w == 3 { WordForm::Abbr } else { WordForm::Full };
                Self::words(self.locale.quarter_prefixes_loose(rest), Some(form), |m| Update::Quarter(m.value))
            }
            Month if w <= 2 => self.numeric(pos, 1, 2, (1, 12), |n, _| Update::Month(n as u8)),
            Month => {
                let form = if w == 3 { WordForm::Abbr } else { WordForm::Full };
                Self::words(self.locale.month_prefixes_loose(rest), Some(form), |m| Update::Month(m.value))
            }
            Day => self.numeric(pos, 1, 2, (1, 31), |n, _| Update::Day(n as u8)),
            Weekday => {
                let form = if w == 4 { WordForm::Full } else { WordForm::Abbr };
                Self::words(self.locale.weekday_prefixes_loose(rest), Some(form), |m| Update::Weekday(m.value))
            }
            Meridian => Self::words(self.locale.meridian_prefixes_loose(rest), None, |m| {
                let which = if m.value == 0 { crate::locale::Meridian::Am } else { crate::locale::Meridian::Pm };
                Update::Meridian(which, m.variant)
            }),
            Hour12 => self.numeric(pos, 1, 2, (1, 12), |n, _| Update::Hour12(n as u8)),
            Hour24 => self.numeric(pos, 1, 2, (0, 23), |n, _| Update::Hour24(n as u8)),
            Minute => self.numeric(pos, 1, 2, (0, 59), |n, _| Update::Minute(n as u8)),
            Second => self.numeric(pos, 1, 2, (0, 59), |n, _| Update::Second(n as u8)),
            Fraction => self.numeric(pos, 1, w, (0, u32::MAX), |n, len| Update::Millis(fraction_to_millis(n, len))),
            ZoneName => zone_name_candidates(rest),
            ZoneOffset => zone_offset_candidates(rest, w),
        }
    }
}

fn apply(st: &mut State, update: Update) {
    let v = &mut st.v;
    match update {
        Update::Year(y) => v.year = Some(y),
        Update::Month(m) => v.month = Some(m),
        Update::Day(d) => v.day = Some(d),
        Update::Hour24(h) => v.hour = Some(h),
        Update::Hour12(h) => st.hour12 = Some(h),
        Update::Minute(m) => v.minute = Some(m),
        Update::Second(s) => v.second = Some(s),
        Update::Millis(ms) => v.millisecond = Some(ms),
        Update::Zone(z) => v.tz_offset_minutes = Some(z),
        Update::Quarter(q) => v.quarter = Some(q),
        Update::Weekday(d) => v.weekday = Some(d),
        Update::Meridian(m, lossy) => {
            st.meridian = Some(m);
            v.lossy |= lossy;
        }
    }
}

/// `yy` values 00-68 are 2000-2068, 69-99 are 1969-1999.
pub fn pivot_two_digit_year(yy: u32) -> i32 {
    if yy <= 68 {
        2000 + yy as i32
    } else {
        1900 + yy as i32
    }
}

fn fraction_to_millis(digits: u32, len: usize) -> u16 {
    let millis = if len <= 3 {
        u64::from(digits) * 10u64.pow(3 - len as u32)
    } else {
        u64::from(digits) / 10u64.pow(len as u32 - 3)
    };
    millis as u16
}

fn zone_name_candidates(rest: &str) -> Vec<(usize, Update)> {
    let mut out: Vec<(usize, Update)> = ZONE_NAMES
        .iter()
        .filter_map(|(name, off)| loose_prefix(rest, name).map(|len| (len, Update::Zone(*off))))
        .collect();
    for prefix in ["GMT", "UTC"] {
        if let Some(len) = loose_prefix(rest, prefix) {
            if let Some((n, off)) = signed_offset(&rest[len..], true) {
                out.push((len + n, Update::Zone(off)));
            }
        }
    }
    out.sort_by_key(|e| std::cmp::Reverse(e.0));
    out
}

fn zone_offset_candidates(rest: &str, width: usize) -> Vec<(usize, Update)> {
    match width {
        1..=3 => signed_offset(rest, false)
            .map(|(n, off)| vec![(n, Update::Zone(off))])
            .unwrap_or_default(),
        4 => {
            let mut out = Vec::new();
            if let Some(tail) = rest.strip_prefix("GMT") {
                if let Some((n, off)) = signed_offset(tail, true) {
                    out.push((3 + n, Update::Zone(off)));
                }
                out.push((3, Update::Zone(0)));
            }
            out
        }
        _ => {
            if rest.starts_with('Z') {
                vec![(1, Update::Zone(0))]
            } else {
                signed_offset(rest, true)
                    .map(|(n, off)| vec![(n, Update::Zone(off))])
                    .unwrap_or_default()
            }
        }
    }
}

/// `+hhmm` or, with `colon`, `+hh:mm`.
fn signed_offset(text: &str, colon: bool) -> Option<(usize, i16)> {
    let b = text.as_bytes();
    let sign: i16 = match b.first()? {
        b'+' => 1,
        b'-' => -1,
        _ => return None,
    };
    let digits = |s: &[u8]| -> Option<i16> {
        if s.len() == 2 && s.iter().all(u8::is_ascii_digit) {
            Some(i16::from(s[0] - b'0') * 10 + i16::from(s[1] - b'0'))
        } else {
            None
        }
    };
    let (hh, mm, len) = if colon {
        if b.len() < 6 || b[3] != b':' {
            return None;
        }
        (digits(&b[1..3])?, digits(&b[4..6])?, 6)
    } else {
        if b.len() < 5 {
            return None;
        }
        (digits(&b[1..3])?, digits(&b[3..5])?, 5)
    };
    if hh > 23 || mm > 59 {
        return None;
    }
    Some((len, sign * (hh * 60 + mm)))
}

fn offset_text(off: i16, colon: bool) -> String {
    let sign = if off < 0 { '-' } else { '+' };
    let abs = off.unsigned_abs();
    if colon {
        format!("{sign}{:02}:{:02}", abs / 60, abs % 60)
    } else {
        format!("{sign}{:02}{:02}", abs / 60, abs % 60)
    }
}

/// Renders `r` with `fs`. A missing zone offset is written as UTC.
pub fn format_instant(r: &ResolvedInstant, fs: &FormatString, locale: &Locale) -> String {
    let mut out = String::new();
    for token in fs.tokens() {
        match token {
            FormatToken::Literal(text) => out.push_str(text),
            FormatToken::Field(fc) => format_field(r, *fc, locale, &mut out),
        }
    }
    out
}

fn format_field(r: &ResolvedInstant, fc: FieldCode, locale: &Locale, out: &mut String) {
    use FieldLetter::*;
    let w = fc.width();
    let num = |out: &mut String, n: u32, width: usize| out.push_str(&format!("{n:0width$}"));
    let zone = r.tz_offset_minutes.unwrap_or(0);
    match fc.letter() {
        Year if w == 2 => num(out, r.year.rem_euclid(100) as u32, 2),
        Year => num(out, r.year as u32, 4),
        Quarter => {
            let q = (r.month - 1) / 3 + 1;
            match w {
                1 | 2 => num(out, u32::from(q), w),
                3 => out.push_str(&locale.quarter_name(q, WordForm::Abbr)),
                _ => out.push_str(&locale.quarter_name(q, WordForm::Full)),
            }
        }
        Month => match w {
            1 | 2 => num(out, u32::from(r.month), w),
            3 => out.push_str(locale.month_name(r.month, WordForm::Abbr)),
            _ => out.push_str(locale.month_name(r.month, WordForm::Full)),
        },
        Day => num(out, u32::from(r.day), w),
        Weekday => {
            let d = weekday(r.year, u32::from(r.month), u32::from(r.day));
            let form = if w == 4 { WordForm::Full } else { WordForm::Abbr };
            out.push_str(locale.weekday_name(d, form));
        }
        Meridian => {
            let m = if r.hour < 12 { crate::locale::Meridian::Am } else { crate::locale::Meridian::Pm };
            out.push_str(locale.meridian_name(m));
        }
        Hour12 => {
            let h = match r.hour % 12 {
                0 => 12,
                h => h,
            };
            num(out, u32::from(h), w);
        }
        Hour24 => num(out, u32::from(r.hour), w),
        Minute => num(out, u32::from(r.minute), w),
        Second => num(out, u32::from(r.second), w),
        Fraction => {
            let ms = u64::from(r.millisecond);
            let digits = if w <= 3 {
                ms / 10u64.pow(3 - w as u32)
            } else {
                ms * 10u64.pow(w as u32 - 3)
            };
            out.push_str(&format!("{digits:0w$}"));
        }
        ZoneName => match ZONE_NAMES.iter().find(|(_, off)| *off == zone) {
            Some((name, _)) => out.push_str(name),
            None => {
                out.push_str("GMT");
                out.push_str(&offset_text(zone, true));
            }
        },
        ZoneOffset => match w {
            1..=3 => out.push_str(&offset_text(zone, false)),
            4 => {
                out.push_str("GMT");
                if zone != 0 {
                    out.push_str(&offset_text(zone, true));
                }
            }
            _ => {
                if zone == 0 {
                    out.push('Z');
                } else {
                    out.push_str(&offset_text(zone, true));
                }
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::icu::tokenize_format;

    fn fs(p: &str) -> FormatString {
        tokenize_format(p).unwrap()
    }

    fn en() -> Locale {
        Locale::english()
    }

    #[test]
    fn parses_date_and_time() {
        let v = dateparse("04/09/2014 - 23:47", &fs("MM/dd/yyyy - HH:mm"), &en()).unwrap();
        assert_eq!(
            (v.month, v.day, v.year, v.hour, v.minute, v.second),
            (Some(4), Some(9), Some(2014), Some(23), Some(47), None)
        );
    }

    #[test]
    fn words_may_run_into_letter_literals() {
        let v = dateparse("16.SeptemberT91", &fs("d.MMMM'T'yy"), &en()).unwrap();
        assert_eq!((v.day, v.month, v.year), (Some(16), Some(9), Some(1991)));
        let v = dateparse("10:04 PMTEST", &fs("hh:mm a'T'zzz"), &en()).unwrap();
        assert_eq!((v.hour, v.tz_offset_minutes), (Some(22), Some(-300)));
    }

    #[test]
    fn combines_twelve_hour_clock_with_marker() {
        let v = dateparse("01-OCT-13 01.09.00.000000 PM", &fs("dd-MMM-yy hh.mm.ss.SSSSSS a"), &en()).unwrap();
        assert_eq!(v.day, Some(1));
        assert_eq!(v.month, Some(10));
        assert_eq!(v.year, Some(2013));
        assert_eq!(v.hour, Some(13));
        assert_eq!(v.minute, Some(9));
        assert_eq!(v.second, Some(0));
        assert_eq!(v.millisecond, Some(0));
        let midnight = dateparse("12:05 AM", &fs("hh:mm a"), &en()).unwrap();
        assert_eq!(midnight.hour, Some(0));
        let noon = dateparse("12:05 PM", &fs("hh:mm a"), &en()).unwrap();
        assert_eq!(noon.hour, Some(12));
        let dotted = dateparse("3:05 p.m.", &fs("h:mm a"), &en()).unwrap();
        assert_eq!(dotted.hour, Some(15));
        assert!(dotted.lossy);
        assert!(!noon.lossy);
    }

    #[test]
    fn reports_out_of_range_fields() {
        let err = dateparse("2014-13-01", &fs("yyyy-MM-dd"), &en()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::FieldOutOfRange);
        assert_eq!((err.offset, err.token), (5, 2));
    }

    #[test]
    fn error_kinds() {
        let f = fs("yyyy-MM-dd");
        let e = dateparse("2014/01/02", &f, &en()).unwrap_err();
        assert_eq!((e.kind, e.offset, e.token), (ParseErrorKind::LiteralMismatch, 4, 1));
        let e = dateparse("2014-01-02X", &f, &en()).unwrap_err();
        assert_eq!((e.kind, e.offset, e.token), (ParseErrorKind::TrailingInput, 10, 5));
        let e = dateparse("2014-01", &f, &en()).unwrap_err();
        assert_eq!((e.kind, e.offset), (ParseErrorKind::IncompleteInput, 7));
        let e = dateparse("2013-02-29", &f, &en()).unwrap_err();
        assert_eq!((e.kind, e.offset, e.token), (ParseErrorKind::FieldOutOfRange, 8, 4));
        assert!(dateparse("2012-02-29", &f, &en()).is_ok());
    }

    #[test]
    fn unpadded_values_under_padded_codes() {
        let v = dateparse("5/6/2015", &fs("MM/dd/yyyy"), &en()).unwrap();
        assert_eq!((v.month, v.day), (Some(5), Some(6)));
        let v = dateparse("20140102", &fs("yyyyMMdd"), &en()).unwrap();
        assert_eq!((v.year, v.month, v.day), (Some(2014), Some(1), Some(2)));
        let v = dateparse("1/15/2014", &fs("M/d/yyyy"), &en()).unwrap();
        assert_eq!((v.month, v.day), (Some(1), Some(15)));
        let v = dateparse("12014", &fs("MMyyyy"), &en()).unwrap();
        assert_eq!((v.month, v.year), (Some(1), Some(2014)));
    }

    #[test]
    fn word_fields() {
        let v = dateparse("Fri Apr 01 02:09:27 EDT 2011", &fs("EEE MMM dd HH:mm:ss zzz yyyy"), &en()).unwrap();
        assert_eq!(v.weekday, Some(5));
        assert_eq!(v.month, Some(4));
        assert_eq!(v.tz_offset_minutes, Some(-240));
        let v = dateparse("Sept 3, 2014", &fs("MMM d, yyyy"), &en()).unwrap();
        assert_eq!(v.month, Some(9));
        assert!(dateparse("September 3, 2014", &fs("MMM d, yyyy"), &en()).is_err());
        let v = dateparse("Q2 2014", &fs("QQQ yyyy"), &en()).unwrap();
        assert_eq!(v.quarter, Some(2));
        let v = dateparse("3rd quarter 2014", &fs("QQQQ yyyy"), &en()).unwrap();
        assert_eq!(v.quarter, Some(3));
        let v = dateparse("01 '2013", &fs("MM ''yyyy"), &en()).unwrap();
        assert_eq!((v.month, v.year), (Some(1), Some(2013)));
        let es = Locale::builtin("es").unwrap();
        let v = dateparse("12 de enero de 2014", &fs("dd 'de' MMMM 'de' yyyy"), &es).unwrap();
        assert_eq!(v.month, Some(1));
    }

    #[test]
    fn zones() {
        let v = dateparse("10:00 -0800", &fs("HH:mm Z"), &en()).unwrap();
        assert_eq!(v.tz_offset_minutes, Some(-480));
        let v = dateparse("10:00 GMT-08:00", &fs("HH:mm ZZZZ"), &en()).unwrap();
        assert_eq!(v.tz_offset_minutes, Some(-480));
        let v = dateparse("10:00Z", &fs("HH:mmZZZZZ"), &en()).unwrap();
        assert_eq!(v.tz_offset_minutes, Some(0));
        let v = dateparse("10:00+05:30", &fs("HH:mmZZZZZ"), &en()).unwrap();
        assert_eq!(v.tz_offset_minutes, Some(330));
        let v = dateparse("10:00 GMT+01:00", &fs("HH:mm zzz"), &en()).unwrap();
        assert_eq!(v.tz_offset_minutes, Some(60));
        let e = dateparse("10:00 XYZ", &fs("HH:mm zzz"), &en()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::FieldOutOfRange);
    }

    #[test]
    fn defaults() {
        let time_only = DateTimeValue { hour: Some(23), minute: Some(47), ..Default::default() };
        assert_eq!(apply_defaults(&time_only).to_string(), "1899-12-30T23:47:00");
        let date = DateTimeValue { year: Some(2013), month: Some(10), day: Some(1), ..Default::default() };
        assert_eq!(apply_defaults(&date).to_string(), "2013-10-01T00:00:00");
        let month = DateTimeValue { month: Some(6), ..Default::default() };
        assert_eq!(apply_defaults(&month).to_string(), "2000-06-01T00:00:00");
        let quarter = DateTimeValue { quarter: Some(3), year: Some(2014), ..Default::default() };
        assert_eq!(apply_defaults(&quarter).to_string(), "2014-07-01T00:00:00");
        let frac = DateTimeValue { second: Some(1), millisecond: Some(5), tz_offset_minutes: Some(-330), ..Default::default() };
        assert_eq!(apply_defaults(&frac).to_string(), "1899-12-30T00:00:01.005-05:30");
    }

    #[test]
    fn defaults_are_idempotent() {
        for v in [
            DateTimeValue::default(),
            DateTimeValue { month: Some(6), ..Default::default() },
            DateTimeValue { hour: Some(4), millisecond: Some(12), ..Default::default() },
            DateTimeValue { quarter: Some(2), tz_offset_minutes: Some(60), ..Default::default() },
        ] {
            let once = apply_defaults(&v);
            assert_eq!(apply_defaults(&once.to_value()), once);
        }
    }

    #[test]
    fn error_rates() {
        let f = fs("yyyy-MM-dd");
        assert_eq!(column_error_rate(&["2014-01-02", "2014-01-03"], &f, &en()), 0.0);
        assert_eq!(column_error_rate(&["2014-01-02", "bad"], &f, &en()), 0.5);
        let table_one = [
            ("EEE MMM dd HH:mm:ss zzz yyyy", "Fri Apr 01 02:09:27 EDT 2011"),
            ("[dd/MMM/yyyy:HH:mm:ss", "[10/Aug/2014:09:30:40"),
            ("dd-MMM-yy hh.mm.ss.SSSSSS a", "01-OCT-13 01.09.00.000000 PM"),
            ("MM ''yyyy", "01 '2013"),
            ("MM/dd/yyyy - HH:mm", "04/09/2014 - 23:47"),
        ];
        for (p, v) in table_one {
            assert_eq!(column_error_rate(&[v], &fs(p), &en()), 0.0, "{p}");
        }
    }

    #[test]
    fn two_digit_year_pivot() {
        assert_eq!(pivot_two_digit_year(0), 2000);
        assert_eq!(pivot_two_digit_year(13), 2013);
        assert_eq!(pivot_two_digit_year(68), 2068);
        assert_eq!(pivot_two_digit_year(69), 1969);
        assert_eq!(pivot_two_digit_year(99), 1999);
    }

    #[test]
    fn formats_instants() {
        let r = ResolvedInstant {
            year: 2011,
            month: 4,
            day: 1,
            hour: 2,
            minute: 9,
            second: 27,
            millisecond: 0,
            tz_offset_minutes: Some(-240),
            has_fraction: false,
        };
        assert_eq!(
            format_instant(&r, &fs("EEE MMM dd HH:mm:ss zzz yyyy"), &en()),
            "Fri Apr 01 02:09:27 EDT 2011"
        );
        assert_eq!(format_instant(&r, &fs("d/M/yy h:mm a"), &en()), "1/4/11 2:09 AM");
        assert_eq!(format_instant(&r, &fs("yyyy-MM-dd'T'HH:mm:ssZZZZZ"), &en()), "2011-04-01T02:09:27-04:00");
        let ms = ResolvedInstant { millisecond: 235, ..r };
        assert_eq!(format_instant(&ms, &fs("ss.S|ss.SS|ss.SSS|ss.SSSSSS"), &en()), "27.2|27.23|27.235|27.235000");
    }
}
