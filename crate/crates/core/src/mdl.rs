//! Minimum-description-length structure extraction.
//!
//! A structure is a sequence of domains that covers every sample value.
//! The search walks all sample values at once: its state is, per value, the
//! set of byte offsets reachable by the domains chosen so far, kept as a
//! bitset. A branch dies as soon as one value has no reachable offset.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::ColumnSample;
use crate::dateparse::{column_error_rate, ZONE_NAMES};
use crate::detection::{Candidate, DetectError, DetectOptions, DetectionResult, Engine, Timing};
use crate::icu::{FieldCode, FieldLetter, FormatString, FormatToken};
use crate::locale::{word_prefix, Locale, WordForm, WordMatch};

/// Values longer than this (in bytes) are outside the search.
pub const MAX_VALUE_LEN: usize = 127;
pub const MAX_DOMAINS: usize = 24;
/// Search nodes allowed under each top-level branch.
pub const BRANCH_BUDGET: usize = 200_000;
pub const HEADER_BITS: f64 = 8.0;
pub const LITERAL_BYTE_BITS: f64 = 8.0;
pub const MAX_MILLIS_WIDTH: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TzForm {
    /// `-0800`
    Rfc,
    /// `-08:00` or `Z`
    Iso,
    /// `GMT-08:00` or `GMT`
    Gmt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuarterForm {
    Abbr,
    Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DomainKind {
    Year2,
    Year4,
    MonthNum,
    MonthWord(WordForm),
    DayNum,
    WeekdayWord(WordForm),
    Hour12,
    Hour24,
    Minute,
    Second,
    /// Fraction digits of exactly this width.
    Millis(u8),
    Meridian,
    TimeZoneName,
    TimeZoneOffset(TzForm),
    Quarter(QuarterForm),
    ConstantLiteral(String),
    Whitespace,
    Punctuation,
    BoundedNumber,
}

/// Date parts; a structure holds at most one domain per group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Year = 0,
    Month,
    Day,
    Weekday,
    Hour,
    Minute,
    Second,
    Millis,
    Meridian,
    Zone,
    Quarter,
}

impl DomainKind {
    fn group(&self) -> Option<Group> {
        use DomainKind::*;
        Some(match self {
            Year2 | Year4 => Group::Year,
            MonthNum | MonthWord(_) => Group::Month,
            DayNum => Group::Day,
            WeekdayWord(_) => Group::Weekday,
            Hour12 | Hour24 => Group::Hour,
            Minute => Group::Minute,
            Second => Group::Second,
            Millis(_) => Group::Millis,
            Meridian => Group::Meridian,
            TimeZoneName | TimeZoneOffset(_) => Group::Zone,
            Quarter(_) => Group::Quarter,
            ConstantLiteral(_) | Whitespace | Punctuation | BoundedNumber => return None,
        })
    }

    pub fn is_prunable(&self) -> bool {
        self.group().is_some()
    }

    /// Kinds that need an earlier domain of another kind.
    pub fn has_context(&self) -> bool {
        matches!(self, DomainKind::Minute | DomainKind::Second | DomainKind::Millis(_) | DomainKind::Meridian)
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self, DomainKind::Whitespace | DomainKind::Punctuation | DomainKind::BoundedNumber)
    }

    fn context_met(&self, prefix: &[DomainKind]) -> bool {
        // Clock fields follow their parent field, at most a literal apart.
        let previous = prefix.iter().rev().find(|d| !matches!(d, DomainKind::ConstantLiteral(_)));
        match self {
            DomainKind::Minute => matches!(previous, Some(DomainKind::Hour12 | DomainKind::Hour24)),
            DomainKind::Second => previous == Some(&DomainKind::Minute),
            DomainKind::Millis(_) => previous == Some(&DomainKind::Second),
            DomainKind::Meridian => prefix.contains(&DomainKind::Hour12),
            _ => true,
        }
    }

    /// Upper bound on a match, in bytes.
    pub fn max_len(&self) -> usize {
        use DomainKind::*;
        match self {
            Year2 | MonthNum | DayNum | Hour12 | Hour24 | Minute | Second => 2,
            Year4 => 4,
            Millis(w) => *w as usize,
            TimeZoneOffset(TzForm::Gmt) => 9,
            TimeZoneOffset(_) => 6,
            ConstantLiteral(s) => s.len(),
            Whitespace | Punctuation => 8,
            BoundedNumber => 4,
            MonthWord(_) | WeekdayWord(_) | Meridian | TimeZoneName | Quarter(_) => 32,
        }
    }

    /// Number of distinct strings the domain can hold for this match.
    pub fn cardinality(&self, matched: &str) -> f64 {
        use DomainKind::*;
        match self {
            Year2 => 100.0,
            Year4 => 2000.0,
            MonthNum | MonthWord(_) | Hour12 => 12.0,
            DayNum => 31.0,
            WeekdayWord(_) => 7.0,
            Hour24 => 24.0,
            Minute | Second => 60.0,
            Millis(w) => 10f64.powi(i32::from(*w)),
            Meridian => 2.0,
            TimeZoneName => ZONE_NAMES.len() as f64,
            TimeZoneOffset(_) => 2.0 * 24.0 * 60.0 + 1.0,
            Quarter(_) => 4.0,
            ConstantLiteral(_) => 1.0,
            Whitespace => 2f64.powi(matched.len() as i32),
            Punctuation => 32f64.powi(matched.len() as i32),
            BoundedNumber => 10f64.powi(matched.len() as i32),
        }
    }

    /// Match lengths at `pos`, longest first.
    pub fn match_lengths(&self, text: &str, pos: usize, locale: &Locale) -> Vec<usize> {
        self.matches(text, pos, locale).into_iter().map(|m| m.len).collect()
    }

    fn matches(&self, text: &str, pos: usize, locale: &Locale) -> Vec<Hit> {
        use DomainKind::*;
        let rest = &text[pos..];
        let bytes = rest.as_bytes();
        let run = bytes.iter().take_while(|b| b.is_ascii_digit()).count();
        let number = |len: usize| -> u32 { rest[..len].parse().unwrap_or(u32::MAX) };
        // One- or two-digit numbers; a single digit only at the end of a run.
        let small = |lo: u32, hi: u32| -> Vec<Hit> {
            let mut out = Vec::new();
            if run >= 2 && (lo..=hi).contains(&number(2)) {
                out.push(Hit::plain(2));
            }
            if run == 1 && (lo..=hi).contains(&number(1)) {
                out.push(Hit::plain(1));
            }
            out
        };
        let exact = |len: usize, lo: u32, hi: u32| -> Vec<Hit> {
            if run >= len && (lo..=hi).contains(&number(len)) {
                vec![Hit::plain(len)]
            } else {
                Vec::new()
            }
        };
        let words = |found: Vec<WordMatch>, form: Option<WordForm>| -> Vec<Hit> {
            let mut out: Vec<Hit> = found
                .into_iter()
                .filter(|m| form.is_none_or(|f| f == m.form))
                .map(|m| Hit {
                    len: m.len,
                    fallback: m.fallback,
                    lossy: false,
                })
                .collect();
            dedupe_hits(&mut out);
            out
        };
        match self {
            Year2 => exact(2, 0, 99),
            Year4 => exact(4, 1000, 2999),
            MonthNum | Hour12 => small(1, 12),
            DayNum => small(1, 31),
            Hour24 => small(0, 23),
            Minute | Second => exact(2, 0, 59),
            Millis(w) => exact(*w as usize, 0, u32::MAX),
            MonthWord(form) => words(locale.month_prefixes(rest), Some(*form)),
            WeekdayWord(form) => words(locale.weekday_prefixes(rest), Some(*form)),
            Quarter(QuarterForm::Abbr) => words(locale.quarter_prefixes(rest), Some(WordForm::Abbr)),
            Quarter(QuarterForm::Word) => words(locale.quarter_prefixes(rest), Some(WordForm::Full)),
            Meridian => {
                let mut out: Vec<Hit> = locale
                    .meridian_prefixes(rest)
                    .into_iter()
                    .map(|m| Hit {
                        len: m.len,
                        fallback: m.fallback,
                        lossy: m.variant && m.len != 2,
                    })
                    .collect();
                dedupe_hits(&mut out);
                out
            }
            TimeZoneName => {
                let mut out: Vec<Hit> = ZONE_NAMES
                    .iter()
                    .filter_map(|(n, _)| word_prefix(rest, n))
                    .map(Hit::plain)
                    .collect();
                dedupe_hits(&mut out);
                out
            }
            TimeZoneOffset(form) => offset_hits(rest, *form),
            ConstantLiteral(s) => {
                let ok = rest.starts_with(s.as_str())
                    && !(s.ends_with(|c: char| c.is_alphabetic())
                        && rest[s.len()..].starts_with(|c: char| c.is_alphabetic()))
                    && !(s.ends_with(|c: char| c.is_ascii_digit()) && rest[s.len()..].starts_with(|c: char| c.is_ascii_digit()));
                if ok {
                    vec![Hit::plain(s.len())]
                } else {
                    Vec::new()
                }
            }
            Whitespace => {
                let n = rest.chars().take_while(|c| c.is_whitespace()).map(char::len_utf8).sum::<usize>();
                if n > 0 && n <= self.max_len() {
                    vec![Hit::plain(n)]
                } else {
                    Vec::new()
                }
            }
            Punctuation => {
                let n = rest
                    .chars()
                    .take_while(|c| !c.is_alphanumeric() && !c.is_whitespace())
                    .map(char::len_utf8)
                    .sum::<usize>();
                if n > 0 && n <= self.max_len() {
                    vec![Hit::plain(n)]
                } else {
                    Vec::new()
                }
            }
            BoundedNumber => {
                if run > 0 && run <= self.max_len() {
                    vec![Hit::plain(run)]
                } else {
                    Vec::new()
                }
            }
        }
    }

    pub fn is_numeric(&self) -> bool {
        use DomainKind::*;
        matches!(
            self,
            Year2 | Year4 | MonthNum | DayNum | Hour12 | Hour24 | Minute | Second | Millis(_) | BoundedNumber
        )
    }

    /// True when the kind's date part is already in `prefix`, a kind it
    /// needs is missing, or it would extend a digit run into a layout that
    /// is not a known packed form.
    pub fn is_redundant_after(&self, prefix: &[DomainKind]) -> bool {
        if let Some(g) = self.group() {
            if prefix.iter().any(|d| d.group() == Some(g)) {
                return true;
            }
        }
        !self.context_met(prefix) || !self.packs_after(prefix)
    }

    fn packs_after(&self, prefix: &[DomainKind]) -> bool {
        if !self.is_numeric() {
            return true;
        }
        let run_start = prefix.iter().rposition(|d| !d.is_numeric()).map_or(0, |i| i + 1);
        let run = &prefix[run_start..];
        if run.is_empty() {
            return true;
        }
        PACKED.iter().any(|layout| {
            layout.len() > run.len() && layout[..run.len()] == *run && layout[run.len()] == *self
        })
    }
}

pub fn is_redundant(candidate: &DomainKind, prefix: &[DomainKind]) -> bool {
    candidate.is_redundant_after(prefix)
}

/// Digit runs that may hold more than one field.
const PACKED: &[&[DomainKind]] = {
    use DomainKind::*;
    &[
        &[Year4, MonthNum, DayNum],
        &[MonthNum, DayNum, Year4],
        &[DayNum, MonthNum, Year4],
        &[Year2, MonthNum, DayNum],
        &[MonthNum, Year4],
        &[Year4, MonthNum],
        &[Hour24, Minute, Second],
    ]
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Hit {
    len: usize,
    fallback: bool,
    lossy: bool,
}

impl Hit {
    fn plain(len: usize) -> Hit {
        Hit {
            len,
            fallback: false,
            lossy: false,
        }
    }
}

/// Longest first; for equal lengths keep the non-fallback, non-lossy hit.
fn dedupe_hits(hits: &mut Vec<Hit>) {
    hits.sort_by(|a, b| b.len.cmp(&a.len).then(a.fallback.cmp(&b.fallback)).then(a.lossy.cmp(&b.lossy)));
    hits.dedup_by_key(|h| h.len);
}

fn offset_hits(rest: &str, form: TzForm) -> Vec<Hit> {
    let b = rest.as_bytes();
    let two = |i: usize, max: u8| -> bool {
        b.len() >= i + 2
            && b[i].is_ascii_digit()
            && b[i + 1].is_ascii_digit()
            && (b[i] - b'0') * 10 + (b[i + 1] - b'0') <= max
    };
    let signed_at = |i: usize| b.get(i).is_some_and(|c| *c == b'+' || *c == b'-');
    let colon_form = |i: usize| signed_at(i) && two(i + 1, 23) && b.get(i + 3) == Some(&b':') && two(i + 4, 59);
    let not_digit_after = |n: usize| !b.get(n).is_some_and(u8::is_ascii_digit);
    let mut out = Vec::new();
    match form {
        TzForm::Rfc => {
            if signed_at(0) && two(1, 23) && two(3, 59) && not_digit_after(5) {
                out.push(Hit::plain(5));
            }
        }
        TzForm::Iso => {
            if colon_form(0) && not_digit_after(6) {
                out.push(Hit::plain(6));
            } else if b.first() == Some(&b'Z') && !b.get(1).is_some_and(|c| c.is_ascii_alphabetic()) {
                out.push(Hit::plain(1));
            }
        }
        TzForm::Gmt => {
            if rest.starts_with("GMT") {
                if colon_form(3) && not_digit_after(9) {
                    out.push(Hit::plain(9));
                }
                if !b.get(3).is_some_and(|c| c.is_ascii_alphabetic()) {
                    out.push(Hit::plain(3));
                }
            }
        }
    }
    out
}

/// What a domain saw across the sample.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainStats {
    pub count: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Some value matched only through the English fallback table.
    pub fallback: bool,
    /// Some value used a spelling ICU would not produce.
    pub lossy: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub kind: DomainKind,
    pub stats: DomainStats,
}

impl Domain {
    pub fn new(kind: DomainKind) -> Domain {
        Domain {
            kind,
            stats: DomainStats::default(),
        }
    }

    fn update_statistics(&mut self, matched: &str, hit: Hit) {
        let s = &mut self.stats;
        s.min_len = if s.count == 0 { matched.len() } else { s.min_len.min(matched.len()) };
        s.max_len = s.max_len.max(matched.len());
        s.count += 1;
        s.fallback |= hit.fallback;
        s.lossy |= hit.lossy;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub domains: Vec<Domain>,
    pub description_length: f64,
}

impl Structure {
    pub fn kinds(&self) -> Vec<DomainKind> {
        self.domains.iter().map(|d| d.kind.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MdlError {
    #[error("no structure covers the sample")]
    NoStructureFound,
    #[error("domain {0:?} has no format code")]
    UntranslatableDomain(DomainKind),
}

/// The non-literal kinds the search tries, in a fixed order.
fn search_kinds() -> Vec<DomainKind> {
    use DomainKind::*;
    let mut kinds = vec![
        Year4,
        Year2,
        MonthNum,
        MonthWord(WordForm::Abbr),
        MonthWord(WordForm::Full),
        DayNum,
        WeekdayWord(WordForm::Abbr),
        WeekdayWord(WordForm::Full),
        Hour24,
        Hour12,
        Minute,
        Second,
    ];
    kinds.extend((1..=MAX_MILLIS_WIDTH).map(Millis));
    kinds.extend([
        Meridian,
        TimeZoneName,
        TimeZoneOffset(TzForm::Rfc),
        TimeZoneOffset(TzForm::Iso),
        TimeZoneOffset(TzForm::Gmt),
        Quarter(QuarterForm::Abbr),
        Quarter(QuarterForm::Word),
        Whitespace,
        Punctuation,
        BoundedNumber,
    ]);
    kinds
}

fn is_word_kind(k: &DomainKind) -> bool {
    matches!(
        k,
        DomainKind::MonthWord(_)
            | DomainKind::WeekdayWord(_)
            | DomainKind::Meridian
            | DomainKind::TimeZoneName
            | DomainKind::TimeZoneOffset(_)
            | DomainKind::Quarter(_)
    )
}

type PosSet = u128;

struct Search<'a> {
    values: Vec<&'a str>,
    kinds: Vec<DomainKind>,
    /// ends[value][kind][pos]: offsets reachable by one match.
    ends: Vec<Vec<Vec<PosSet>>>,
    targets: Vec<PosSet>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Step {
    Kind(usize),
    Literal(String),
}

fn bits(mut set: PosSet) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if set == 0 {
            None
        } else {
            let i = set.trailing_zeros() as usize;
            set &= set - 1;
            Some(i)
        }
    })
}

impl<'a> Search<'a> {
    fn new<S: AsRef<str>>(values: &'a [S], locale: &Locale) -> Search<'a> {
        let values: Vec<&str> = values.iter().map(AsRef::as_ref).collect();
        let kinds = search_kinds();
        let ends = values
            .iter()
            .map(|v| {
                kinds
                    .iter()
                    .map(|k| {
                        (0..v.len())
                            .map(|p| {
                                if !v.is_char_boundary(p) {
                                    return 0;
                                }
                                k.matches(v, p, locale)
                                    .into_iter()
                                    .fold(0, |acc, h| acc | (1u128 << (p + h.len)))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let targets = values.iter().map(|v| 1u128 << v.len()).collect();
        Search {
            values,
            kinds,
            ends,
            targets,
        }
    }

    fn advance_kind(&self, state: &[PosSet], k: usize) -> Option<Vec<PosSet>> {
        let mut next = Vec::with_capacity(state.len());
        for (v, &set) in state.iter().enumerate() {
            let table = &self.ends[v][k];
            let mut out = 0;
            for p in bits(set) {
                if p < table.len() {
                    out |= table[p];
                }
            }
            if out == 0 {
                return None;
            }
            next.push(out);
        }
        Some(next)
    }

    fn advance_literal(&self, state: &[PosSet], lit: &str) -> Option<Vec<PosSet>> {
        let kind = DomainKind::ConstantLiteral(lit.to_string());
        let mut next = Vec::with_capacity(state.len());
        for (v, &set) in state.iter().enumerate() {
            let text = self.values[v];
            let mut out = 0;
            for p in bits(set) {
                if p < text.len() && !kind.matches(text, p, &Locale::english()).is_empty() {
                    out |= 1u128 << (p + lit.len());
                }
            }
            if out == 0 {
                return None;
            }
            next.push(out);
        }
        Some(next)
    }

    /// Literal texts read off the first value at its reachable offsets: runs
    /// of non-digits cut after any non-letter or after a whole letter run,
    /// stopping before a letter run a usable word domain could take.
    fn literal_candidates(&self, state: &[PosSet], prefix: &[DomainKind]) -> Vec<String> {
        let text = self.values[0];
        let mut out: Vec<String> = Vec::new();
        for p in bits(state[0]) {
            if p >= text.len() || !text.is_char_boundary(p) {
                continue;
            }
            let mut i = p;
            let bytes_at = |i: usize| text[i..].chars().next();
            while let Some(c) = bytes_at(i) {
                if c.is_ascii_digit() {
                    break;
                }
                if c.is_alphabetic() {
                    let word_here = self.kinds.iter().enumerate().any(|(k, kind)| {
                        is_word_kind(kind) && !kind.is_redundant_after(prefix) && self.ends[0][k][i] != 0
                    });
                    if word_here {
                        break;
                    }
                    let run: usize = text[i..].chars().take_while(|c| c.is_alphabetic()).map(char::len_utf8).sum();
                    i += run;
                } else {
                    i += c.len_utf8();
                }
                let lit = &text[p..i];
                if !out.iter().any(|o| o == lit) {
                    out.push(lit.to_string());
                }
            }
        }
        out
    }

    fn done(&self, state: &[PosSet]) -> bool {
        state.iter().zip(&self.targets).all(|(s, t)| s & t != 0)
    }

    fn exhausted(&self, state: &[PosSet]) -> bool {
        state.iter().zip(&self.targets).all(|(s, t)| s == t)
    }

    fn step_kind(&self, step: &Step) -> DomainKind {
        match step {
            Step::Kind(k) => self.kinds[*k].clone(),
            Step::Literal(s) => DomainKind::ConstantLiteral(s.clone()),
        }
    }

    /// Children of a search node, in order.
    fn expand(&self, state: &[PosSet], prefix: &[DomainKind]) -> Vec<(Step, Vec<PosSet>)> {
        let mut out = Vec::new();
        for (k, kind) in self.kinds.iter().enumerate() {
            if kind.is_fallback() || kind.is_redundant_after(prefix) {
                continue;
            }
            if let Some(next) = self.advance_kind(state, k) {
                out.push((Step::Kind(k), next));
            }
        }
        let last_literal = matches!(prefix.last(), Some(DomainKind::ConstantLiteral(_)));
        if !last_literal {
            for lit in self.literal_candidates(state, prefix) {
                if let Some(next) = self.advance_literal(state, &lit) {
                    out.push((Step::Literal(lit), next));
                }
            }
        }
        if out.is_empty() {
            for (k, kind) in self.kinds.iter().enumerate() {
                if kind.is_fallback() && prefix.last() != Some(kind) {
                    if let Some(next) = self.advance_kind(state, k) {
                        out.push((Step::Kind(k), next));
                    }
                }
            }
        }
        out
    }

    fn dfs(&self, state: &[PosSet], prefix: &mut Vec<DomainKind>, out: &mut Vec<Vec<DomainKind>>, budget: &mut usize) {
        if *budget == 0 {
            return;
        }
        *budget -= 1;
        if self.done(state) {
            out.push(prefix.clone());
        }
        if self.exhausted(state) || prefix.len() >= MAX_DOMAINS {
            return;
        }
        for (step, next) in self.expand(state, prefix) {
            prefix.push(self.step_kind(&step));
            self.dfs(&next, prefix, out, budget);
            prefix.pop();
        }
    }
}

/// Every domain sequence covering all of `values`, in search order.
pub fn enumerate_structures<S: AsRef<str>>(values: &[S], locale: &Locale) -> Result<Vec<Vec<DomainKind>>, MdlError> {
    if values.is_empty() || values.iter().any(|v| v.as_ref().is_empty() || v.as_ref().len() > MAX_VALUE_LEN) {
        return Err(MdlError::NoStructureFound);
    }
    let search = Search::new(values, locale);
    let root: Vec<PosSet> = vec![1; search.values.len()];
    let branches = search.expand(&root, &[]);
    let found: Vec<Vec<Vec<DomainKind>>> = branches
        .par_iter()
        .map(|(step, next)| {
            let mut out = Vec::new();
            let mut prefix = vec![search.step_kind(step)];
            let mut budget = BRANCH_BUDGET;
            search.dfs(next, &mut prefix, &mut out, &mut budget);
            out
        })
        .collect();
    let all: Vec<Vec<DomainKind>> = found.into_iter().flatten().collect();
    if all.is_empty() {
        Err(MdlError::NoStructureFound)
    } else {
        Ok(all)
    }
}

/// Splits `value` along `kinds`, longest matches first.
fn segment(value: &str, kinds: &[DomainKind], locale: &Locale) -> Option<Vec<(usize, Hit)>> {
    fn go(value: &str, kinds: &[DomainKind], pos: usize, locale: &Locale, out: &mut Vec<(usize, Hit)>) -> bool {
        let Some((first, rest)) = kinds.split_first() else {
            return pos == value.len();
        };
        if pos >= value.len() {
            return false;
        }
        for hit in first.matches(value, pos, locale) {
            out.push((pos, hit));
            if go(value, rest, pos + hit.len, locale, out) {
                return true;
            }
            out.pop();
        }
        false
    }
    let mut out = Vec::new();
    go(value, kinds, 0, locale, &mut out).then_some(out)
}

/// Statistics and description length of `kinds` over `values`.
pub fn build_structure<S: AsRef<str>>(kinds: &[DomainKind], values: &[S], locale: &Locale) -> Option<Structure> {
    let mut domains: Vec<Domain> = kinds.iter().cloned().map(Domain::new).collect();
    let mut data_bits = 0.0;
    for v in values {
        let v = v.as_ref();
        let segs = segment(v, kinds, locale)?;
        for (d, (pos, hit)) in domains.iter_mut().zip(segs) {
            let text = &v[pos..pos + hit.len];
            data_bits += d.kind.cardinality(text).log2();
            d.update_statistics(text, hit);
        }
    }
    let mut s = Structure {
        domains,
        description_length: 0.0,
    };
    s.description_length = model_bits(&s) + data_bits;
    Some(s)
}

fn model_bits(s: &Structure) -> f64 {
    s.domains
        .iter()
        .map(|d| match &d.kind {
            DomainKind::ConstantLiteral(t) => HEADER_BITS + LITERAL_BYTE_BITS * t.len() as f64,
            _ => HEADER_BITS,
        })
        .sum()
}

/// Description length of `s` over `values`: header bits plus
/// the log-cardinality of every matched piece.
pub fn description_length<S: AsRef<str>>(s: &Structure, values: &[S], locale: &Locale) -> f64 {
    build_structure(&s.kinds(), values, locale).map_or(f64::INFINITY, |b| b.description_length)
}

fn has(s: &Structure, g: Group) -> bool {
    s.domains.iter().any(|d| d.kind.group() == Some(g))
}

/// Drops structures with incomplete date parts, a 12-hour clock without a
/// marker, or a two-digit year run into an arbitrary number.
pub fn global_prune(candidates: Vec<Structure>) -> Vec<Structure> {
    candidates
        .into_iter()
        .filter(|s| {
            let month = has(s, Group::Month);
            let quarter = has(s, Group::Quarter);
            let day = has(s, Group::Day);
            let datey = has(s, Group::Year) || day || has(s, Group::Weekday) || quarter;
            let timey = has(s, Group::Hour);
            if day && !month {
                return false;
            }
            if datey && !month && !(quarter && !day) {
                return false;
            }
            if !datey && !month && !timey {
                return false;
            }
            if s.domains.iter().any(|d| d.kind == DomainKind::Hour12) && !has(s, Group::Meridian) {
                return false;
            }
            let year2_next_to_number = s.domains.windows(2).any(|w| {
                let (a, b) = (&w[0].kind, &w[1].kind);
                (*a == DomainKind::Year2 && *b == DomainKind::BoundedNumber)
                    || (*a == DomainKind::BoundedNumber && *b == DomainKind::Year2)
            });
            let year2_across_punct = s.domains.windows(3).any(|w| {
                let ks = [&w[0].kind, &w[1].kind, &w[2].kind];
                let punct = |k: &DomainKind| {
                    matches!(k, DomainKind::Punctuation)
                        || matches!(k, DomainKind::ConstantLiteral(t) if t.chars().all(|c| c.is_ascii_punctuation()))
                };
                (*ks[0] == DomainKind::Year2 && punct(ks[1]) && *ks[2] == DomainKind::BoundedNumber)
                    || (*ks[0] == DomainKind::BoundedNumber && punct(ks[1]) && *ks[2] == DomainKind::Year2)
            });
            !year2_next_to_number && !year2_across_punct && packed_runs_complete(s)
        })
        .collect()
}

/// Every digit run holding several fields is a whole packed layout.
fn packed_runs_complete(s: &Structure) -> bool {
    let kinds = s.kinds();
    kinds
        .split(|k| !k.is_numeric())
        .filter(|run| run.len() > 1)
        .all(|run| PACKED.contains(&run))
}

fn literal_field(text: &str, locale: &Locale) -> Option<FieldCode> {
    let whole = |found: Vec<WordMatch>| found.into_iter().find(|m| m.len == text.len());
    if let Some(m) = whole(locale.month_prefixes(text)) {
        let w = if m.form == WordForm::Abbr { 3 } else { 4 };
        return Some(FieldCode::of(FieldLetter::Month, w));
    }
    if let Some(m) = whole(locale.weekday_prefixes(text)) {
        let w = if m.form == WordForm::Abbr { 3 } else { 4 };
        return Some(FieldCode::of(FieldLetter::Weekday, w));
    }
    if locale.match_meridian(text).is_some() {
        return Some(FieldCode::of(FieldLetter::Meridian, 1));
    }
    if ZONE_NAMES.iter().any(|(n, _)| *n == text) {
        return Some(FieldCode::of(FieldLetter::ZoneName, 3));
    }
    None
}

/// Maps domains to format tokens. Numeric widths are 1 when some value had
/// an unpadded single digit.
pub fn unparameterize(s: &Structure, locale: &Locale) -> Result<FormatString, MdlError> {
    use DomainKind::*;
    let mut fs = FormatString::new();
    for d in &s.domains {
        let narrow = |padded: usize| if d.stats.min_len == 1 { 1 } else { padded };
        let (letter, width) = match &d.kind {
            Year2 => (FieldLetter::Year, 2),
            Year4 => (FieldLetter::Year, 4),
            MonthNum => (FieldLetter::Month, narrow(2)),
            MonthWord(WordForm::Abbr) => (FieldLetter::Month, 3),
            MonthWord(WordForm::Full) => (FieldLetter::Month, 4),
            DayNum => (FieldLetter::Day, narrow(2)),
            WeekdayWord(WordForm::Abbr) => (FieldLetter::Weekday, 3),
            WeekdayWord(WordForm::Full) => (FieldLetter::Weekday, 4),
            Hour12 => (FieldLetter::Hour12, narrow(2)),
            Hour24 => (FieldLetter::Hour24, narrow(2)),
            Minute => (FieldLetter::Minute, 2),
            Second => (FieldLetter::Second, 2),
            Millis(w) => (FieldLetter::Fraction, *w as usize),
            Meridian => (FieldLetter::Meridian, 1),
            TimeZoneName => (FieldLetter::ZoneName, 3),
            TimeZoneOffset(TzForm::Rfc) => (FieldLetter::ZoneOffset, 1),
            TimeZoneOffset(TzForm::Iso) => (FieldLetter::ZoneOffset, 5),
            TimeZoneOffset(TzForm::Gmt) => (FieldLetter::ZoneOffset, 4),
            Quarter(QuarterForm::Abbr) => (FieldLetter::Quarter, 3),
            Quarter(QuarterForm::Word) => (FieldLetter::Quarter, 4),
            ConstantLiteral(text) => {
                let taken = |l: FieldLetter| fs.has_letter(l);
                match literal_field(text, locale) {
                    Some(fc) if !taken(fc.letter()) => fs.push(FormatToken::Field(fc)),
                    _ => fs.push_literal(text),
                }
                continue;
            }
            other => return Err(MdlError::UntranslatableDomain(other.clone())),
        };
        fs.push(FormatToken::Field(FieldCode::of(letter, width)));
    }
    Ok(fs)
}

/// Presence of date parts, most significant first.
fn significance(fs: &FormatString) -> [bool; 11] {
    let mut out = [false; 11];
    for fc in fs.fields() {
        let slot = match fc.letter() {
            FieldLetter::Year if fc.width() == 4 => 0,
            FieldLetter::Year => 1,
            FieldLetter::Month => 2,
            FieldLetter::Day => 3,
            FieldLetter::Hour12 | FieldLetter::Hour24 => 4,
            FieldLetter::Minute => 5,
            FieldLetter::Second => 6,
            FieldLetter::Fraction => 7,
            FieldLetter::ZoneName | FieldLetter::ZoneOffset => 8,
            FieldLetter::Quarter => 9,
            FieldLetter::Weekday => 10,
            FieldLetter::Meridian => continue,
        };
        out[slot] = true;
    }
    out
}

/// A translated candidate before ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct MdlCandidate {
    pub format: FormatString,
    pub locale: String,
    pub description_length: f64,
    pub error_rate: f64,
    pub kinds: Vec<DomainKind>,
}

fn rank_cmp(a: &MdlCandidate, b: &MdlCandidate, requested: &str) -> Ordering {
    a.error_rate
        .total_cmp(&b.error_rate)
        .then_with(|| significance(&b.format).cmp(&significance(&a.format)))
        .then_with(|| (b.locale == requested).cmp(&(a.locale == requested)))
        .then(a.description_length.total_cmp(&b.description_length))
        .then_with(|| a.format.to_string().cmp(&b.format.to_string()))
}

/// Sorts by error rate, significance, locale match, description length and
/// pattern text.
pub fn rank_candidates(mut candidates: Vec<MdlCandidate>, requested_locale: &str) -> Vec<MdlCandidate> {
    candidates.sort_by(|a, b| rank_cmp(a, b, requested_locale));
    candidates
}

pub struct MdlDetector {
    locale: Locale,
    options: DetectOptions,
}

impl MdlDetector {
    pub fn new(locale: &Locale, options: DetectOptions) -> MdlDetector {
        MdlDetector {
            locale: locale.clone(),
            options,
        }
    }

    /// Pruned, translated and deduplicated candidates for `values`, unranked
    /// and without error rates.
    pub fn propose<S: AsRef<str>>(&self, values: &[S]) -> Result<Vec<MdlCandidate>, MdlError> {
        let kinds = enumerate_structures(values, &self.locale)?;
        let structures: Vec<Structure> = kinds
            .iter()
            .filter_map(|k| build_structure(k, values, &self.locale))
            .collect();
        let mut by_format: HashMap<String, usize> = HashMap::new();
        let mut out: Vec<MdlCandidate> = Vec::new();
        for s in global_prune(structures) {
            let Ok(format) = unparameterize(&s, &self.locale) else {
                continue;
            };
            let fallback = s.domains.iter().any(|d| d.stats.fallback);
            let locale = if fallback { "en".to_string() } else { self.locale.id().to_string() };
            let cand = MdlCandidate {
                format,
                locale,
                description_length: s.description_length,
                error_rate: 0.0,
                kinds: s.kinds(),
            };
            let key = cand.format.to_string();
            match by_format.get(&key) {
                Some(&i) if out[i].description_length <= cand.description_length => {}
                Some(&i) => out[i] = cand,
                None => {
                    by_format.insert(key, out.len());
                    out.push(cand);
                }
            }
        }
        if out.is_empty() {
            return Err(MdlError::NoStructureFound);
        }
        Ok(out)
    }

    pub fn detect(&self, sample: &ColumnSample) -> Result<DetectionResult, DetectError> {
        if sample.sample.is_empty() {
            return Err(DetectError::EmptySample);
        }
        let started = Instant::now();
        let proposed = self.propose(&sample.sample).map_err(|_| DetectError::NoStructureFound)?;
        let analysis = started.elapsed();
        let started = Instant::now();
        let column = &sample.non_null_values;
        let scored: Vec<MdlCandidate> = proposed
            .into_par_iter()
            .map(|mut c| {
                c.error_rate = column_error_rate(column, &c.format, &self.locale);
                c
            })
            .collect();
        let checks = (column.len() * scored.len()).max(1);
        let validation = started.elapsed();
        let ranked: Vec<Candidate> = rank_candidates(scored, self.locale.id())
            .into_iter()
            .filter(|c| c.error_rate <= self.options.max_error_rate)
            .map(|c| Candidate {
                format: c.format,
                locale: c.locale,
                error_rate: c.error_rate,
                score: c.description_length,
            })
            .collect();
        if ranked.is_empty() {
            return Err(DetectError::NoStructureFound);
        }
        Ok(DetectionResult {
            engine: Engine::Mdl,
            column: sample.column_name.clone(),
            candidates: ranked,
            timing: Timing {
                analysis_micros: analysis.as_secs_f64() * 1e6,
                validation_micros: validation.as_secs_f64() * 1e6 / checks as f64,
            },
        })
    }
}

pub fn detect_mdl(sample: &ColumnSample, locale: &Locale) -> Result<DetectionResult, DetectError> {
    MdlDetector::new(locale, DetectOptions::default()).detect(sample)
}
