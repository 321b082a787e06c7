//! Month, weekday, meridian and quarter words per locale.
//!
//! Matching is case-insensitive and always falls back to English after the
//! requested locale. Tables are read from a line-oriented `key=value` format:
//!
//! ```text
//! id=en
//! month.9.full=September
//! month.9.abbr=Sep|Sept
//! weekday.5.abbr=Fri
//! am=AM|a.m.
//! quarter.2.abbr=Q2
//! ```
//!
//! `|` separates accepted variants; the first variant is used for output.

use std::collections::HashSet;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocaleError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: empty value for {key:?}")]
    EmptyValue { line: usize, key: String },
    #[error("missing key {0:?}")]
    MissingKey(String),
    #[error("no built-in locale {0:?}")]
    UnknownLocale(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WordForm {
    Abbr,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Meridian {
    Am,
    Pm,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameSet {
    pub full: Vec<String>,
    pub abbr: Vec<String>,
}

impl NameSet {
    fn variants(&self, form: WordForm) -> &[String] {
        match form {
            WordForm::Abbr => &self.abbr,
            WordForm::Full => &self.full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocaleSpec {
    pub id: String,
    pub months: Vec<NameSet>,
    pub weekdays: Vec<NameSet>,
    pub am: Vec<String>,
    pub pm: Vec<String>,
    pub quarters: Vec<NameSet>,
}

/// A word found at the start of some text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordMatch {
    /// 1-based month, weekday (Monday = 1) or quarter; 0/1 for AM/PM.
    pub value: u8,
    /// Matched length in bytes, including an accepted trailing period.
    pub len: usize,
    pub form: WordForm,
    /// Matched through the English fallback rather than the locale itself.
    pub fallback: bool,
    /// Matched a non-canonical spelling (e.g. "a.m." for AM).
    pub variant: bool,
}

impl LocaleSpec {
    pub fn parse(text: &str) -> Result<LocaleSpec, LocaleError> {
        let mut spec = LocaleSpec {
            id: String::new(),
            months: vec![NameSet::default(); 12],
            weekdays: vec![NameSet::default(); 7],
            am: Vec::new(),
            pm: Vec::new(),
            quarters: vec![NameSet::default(); 4],
        };
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(LocaleError::Syntax { line })?;
            let key = key.trim();
            let values: Vec<String> = value
                .split('|')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            if values.is_empty() {
                return Err(LocaleError::EmptyValue { line, key: key.to_string() });
            }
            if !seen.insert(key.to_string()) {
                return Err(LocaleError::DuplicateKey { line, key: key.to_string() });
            }
            let unknown = || LocaleError::UnknownKey { line, key: key.to_string() };
            match key {
                "id" => spec.id = values[0].clone(),
                "am" => spec.am = values,
                "pm" => spec.pm = values,
                _ => {
                    let mut parts = key.split('.');
                    let (Some(table), Some(n), Some(form), None) =
                        (parts.next(), parts.next(), parts.next(), parts.next())
                    else {
                        return Err(unknown());
                    };
                    let n: usize = n.parse().map_err(|_| unknown())?;
                    let slots = match table {
                        "month" => &mut spec.months,
                        "weekday" => &mut spec.weekdays,
                        "quarter" => &mut spec.quarters,
                        _ => return Err(unknown()),
                    };
                    let slot = n.checked_sub(1).and_then(|i| slots.get_mut(i)).ok_or_else(unknown)?;
                    match form {
                        "full" => slot.full = values,
                        "abbr" => slot.abbr = values,
                        _ => return Err(unknown()),
                    }
                }
            }
        }
        if spec.id.is_empty() {
            return Err(LocaleError::MissingKey("id".into()));
        }
        for (table, slots) in [("month", &spec.months), ("weekday", &spec.weekdays)] {
            for (i, slot) in slots.iter().enumerate() {
                for (form, names) in [("full", &slot.full), ("abbr", &slot.abbr)] {
                    if names.is_empty() {
                        return Err(LocaleError::MissingKey(format!("{table}.{}.{form}", i + 1)));
                    }
                }
            }
        }
        if spec.am.is_empty() {
            return Err(LocaleError::MissingKey("am".into()));
        }
        if spec.pm.is_empty() {
            return Err(LocaleError::MissingKey("pm".into()));
        }
        Ok(spec)
    }
}

/// A locale table with English fallback. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Locale {
    spec: Arc<LocaleSpec>,
}

static ENGLISH: OnceLock<Locale> = OnceLock::new();
static SPANISH: OnceLock<Locale> = OnceLock::new();

impl Locale {
    pub fn english() -> Locale {
        ENGLISH
            .get_or_init(|| {
                Locale::from_spec(LocaleSpec::parse(include_str!("../data/en.locale")).expect("en table"))
            })
            .clone()
    }

    pub fn builtin(id: &str) -> Result<Locale, LocaleError> {
        match id {
            "en" => Ok(Locale::english()),
            "es" => Ok(SPANISH
                .get_or_init(|| {
                    Locale::from_spec(LocaleSpec::parse(include_str!("../data/es.locale")).expect("es table"))
                })
                .clone()),
            other => Err(LocaleError::UnknownLocale(other.to_string())),
        }
    }

    pub fn from_spec(spec: LocaleSpec) -> Locale {
        Locale { spec: Arc::new(spec) }
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn spec(&self) -> &LocaleSpec {
        &self.spec
    }

    fn tables(&self) -> Vec<(Arc<LocaleSpec>, bool)> {
        let mut out = vec![(self.spec.clone(), false)];
        if self.spec.id != "en" {
            out.push((Locale::english().spec, true));
        }
        out
    }

    pub fn month_prefixes(&self, text: &str) -> Vec<WordMatch> {
        self.named_prefixes(text, |s| &s.months, true)
    }

    pub fn weekday_prefixes(&self, text: &str) -> Vec<WordMatch> {
        self.named_prefixes(text, |s| &s.weekdays, true)
    }

    pub fn quarter_prefixes(&self, text: &str) -> Vec<WordMatch> {
        self.named_prefixes(text, |s| &s.quarters, true)
    }

    pub fn meridian_prefixes(&self, text: &str) -> Vec<WordMatch> {
        self.meridians(text, true)
    }

    /// Like [`Locale::month_prefixes`], but a word may run straight into
    /// following letters. For reading values against a known pattern.
    pub fn month_prefixes_loose(&self, text: &str) -> Vec<WordMatch> {
        self.named_prefixes(text, |s| &s.months, false)
    }

    pub fn weekday_prefixes_loose(&self, text: &str) -> Vec<WordMatch> {
        self.named_prefixes(text, |s| &s.weekdays, false)
    }

    pub fn quarter_prefixes_loose(&self, text: &str) -> Vec<WordMatch> {
        self.named_prefixes(text, |s| &s.quarters, false)
    }

    pub fn meridian_prefixes_loose(&self, text: &str) -> Vec<WordMatch> {
        self.meridians(text, false)
    }

    fn meridians(&self, text: &str, bounded: bool) -> Vec<WordMatch> {
        let mut out = Vec::new();
        for (spec, fallback) in self.tables() {
            for (value, names) in [(0u8, &spec.am), (1u8, &spec.pm)] {
                for (vi, name) in names.iter().enumerate() {
                    if let Some(len) = match_prefix(text, name, bounded) {
                        push_unique(&mut out, WordMatch {
                            value,
                            len,
                            form: WordForm::Abbr,
                            fallback,
                            variant: vi > 0,
                        });
                    }
                }
            }
        }
        out
    }

    fn named_prefixes(&self, text: &str, table: impl Fn(&LocaleSpec) -> &Vec<NameSet>, bounded: bool) -> Vec<WordMatch> {
        let mut out = Vec::new();
        for (spec, fallback) in self.tables() {
            for (i, slot) in table(&spec).iter().enumerate() {
                for form in [WordForm::Full, WordForm::Abbr] {
                    for (vi, name) in slot.variants(form).iter().enumerate() {
                        let Some(len) = match_prefix(text, name, bounded) else {
                            continue;
                        };
                        let m = WordMatch {
                            value: i as u8 + 1,
                            len,
                            form,
                            fallback,
                            variant: vi > 0,
                        };
                        push_unique(&mut out, m);
                        if form == WordForm::Abbr && text[len..].starts_with('.') {
                            push_unique(&mut out, WordMatch { len: len + 1, ..m });
                        }
                    }
                }
            }
        }
        out
    }

    /// Whole-text month lookup.
    pub fn match_month(&self, text: &str) -> Option<u8> {
        whole(text, self.month_prefixes(text))
    }

    pub fn match_weekday(&self, text: &str) -> Option<u8> {
        whole(text, self.weekday_prefixes(text))
    }

    pub fn match_meridian(&self, text: &str) -> Option<Meridian> {
        whole(text, self.meridian_prefixes(text)).map(|v| if v == 0 { Meridian::Am } else { Meridian::Pm })
    }

    /// True when some alphabetic word of `text` is a month or weekday name.
    pub fn contains_calendar_word(&self, text: &str) -> bool {
        text.split(|c: char| !c.is_alphabetic())
            .filter(|w| !w.is_empty())
            .any(|w| self.match_month(w).is_some() || self.match_weekday(w).is_some())
    }

    pub fn month_name(&self, month: u8, form: WordForm) -> &str {
        &self.spec.months[month as usize - 1].variants(form)[0]
    }

    pub fn weekday_name(&self, weekday: u8, form: WordForm) -> &str {
        &self.spec.weekdays[weekday as usize - 1].variants(form)[0]
    }

    pub fn meridian_name(&self, m: Meridian) -> &str {
        match m {
            Meridian::Am => &self.spec.am[0],
            Meridian::Pm => &self.spec.pm[0],
        }
    }

    /// Quarter words are optional in locale files; missing ones use English.
    pub fn quarter_name(&self, quarter: u8, form: WordForm) -> String {
        let own = self.spec.quarters[quarter as usize - 1].variants(form);
        match own.first() {
            Some(name) => name.clone(),
            None => Locale::english().quarter_name(quarter, form),
        }
    }
}

fn push_unique(out: &mut Vec<WordMatch>, m: WordMatch) {
    if !out.iter().any(|o| o.value == m.value && o.len == m.len && o.form == m.form) {
        out.push(m);
    }
}

fn whole(text: &str, matches: Vec<WordMatch>) -> Option<u8> {
    matches.into_iter().find(|m| m.len == text.len()).map(|m| m.value)
}

fn chars_eq_ci(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Byte length of `word` at the start of `text`, compared case-insensitively,
/// provided the match ends on a word boundary.
pub fn word_prefix(text: &str, word: &str) -> Option<usize> {
    match_prefix(text, word, true)
}

/// Case-insensitive prefix match with no word-boundary check.
pub fn loose_prefix(text: &str, word: &str) -> Option<usize> {
    match_prefix(text, word, false)
}

fn match_prefix(text: &str, word: &str, bounded: bool) -> Option<usize> {
    let mut rest = text.char_indices();
    let mut end = 0;
    for wc in word.chars() {
        let (i, tc) = rest.next()?;
        if !chars_eq_ci(tc, wc) {
            return None;
        }
        end = i + tc.len_utf8();
    }
    if end == 0 {
        return None;
    }
    let last_is_alpha = word.chars().last().is_some_and(char::is_alphabetic);
    match text[end..].chars().next() {
        Some(next) if bounded && last_is_alpha && next.is_alphabetic() => None,
        _ => Some(end),
    }
}
