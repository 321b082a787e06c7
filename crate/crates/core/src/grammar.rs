//! The weighted date-time grammar, its lexer, binarization and dump format.
//!
//! Grammars work over lexed tokens rather than characters. A terminal is a
//! predicate on a single token; multi-token constructs such as "p.m." or
//! "GMT+01:00" are nonterminals whose rule carries the field code they stand
//! for (`emit`).

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub use crate::calendar::{days_in_month_bound, is_leap, max_days_in_month};
use crate::dateparse::{pivot_two_digit_year, ZONE_NAMES};
use crate::icu::{FieldCode, FieldLetter, FormatString};
use crate::locale::{word_prefix, Locale, WordForm};

pub const START: &str = "DateTimeGrammar";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Digits,
    Alpha,
    Sep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexedToken<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// Byte offset of the token in the lexed text.
    pub start: usize,
}

/// Maximal digit runs, maximal alphabetic runs, and single separator chars.
pub fn lex(text: &str) -> Vec<LexedToken<'_>> {
    fn class(c: char) -> TokenKind {
        if c.is_ascii_digit() {
            TokenKind::Digits
        } else if c.is_alphabetic() {
            TokenKind::Alpha
        } else {
            TokenKind::Sep
        }
    }
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        let kind = class(c);
        let mut end = start + c.len_utf8();
        if kind != TokenKind::Sep {
            while let Some(&(i, d)) = chars.peek() {
                if class(d) != kind {
                    break;
                }
                end = i + d.len_utf8();
                chars.next();
            }
        }
        out.push(LexedToken {
            kind,
            text: &text[start..end],
            start,
        });
    }
    out
}

/// Packed digit runs such as `20140102`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compact {
    YearMonthDay,
    MonthDayYear,
    DayMonthYear,
    ShortYearMonthDay,
    MonthYear,
    YearMonth,
    HourMinuteSecond,
}

impl Compact {
    pub const ALL: [Compact; 7] = [
        Compact::YearMonthDay,
        Compact::MonthDayYear,
        Compact::DayMonthYear,
        Compact::ShortYearMonthDay,
        Compact::MonthYear,
        Compact::YearMonth,
        Compact::HourMinuteSecond,
    ];

    pub fn pattern(self) -> &'static str {
        match self {
            Compact::YearMonthDay => "yyyyMMdd",
            Compact::MonthDayYear => "MMddyyyy",
            Compact::DayMonthYear => "ddMMyyyy",
            Compact::ShortYearMonthDay => "yyMMdd",
            Compact::MonthYear => "MMyyyy",
            Compact::YearMonth => "yyyyMM",
            Compact::HourMinuteSecond => "HHmmss",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Compact::YearMonthDay => "compact_ymd",
            Compact::MonthDayYear => "compact_mdy",
            Compact::DayMonthYear => "compact_dmy",
            Compact::ShortYearMonthDay => "compact_yymd",
            Compact::MonthYear => "compact_my",
            Compact::YearMonth => "compact_ym",
            Compact::HourMinuteSecond => "compact_hms",
        }
    }

    fn read(self, digits: &str) -> Option<Sem> {
        let pattern = self.pattern();
        if digits.len() != pattern.len() {
            return None;
        }
        let mut sem = Sem::default();
        let bytes = pattern.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let run = bytes[i..].iter().take_while(|&&b| b == bytes[i]).count();
            let n: u32 = digits[i..i + run].parse().ok()?;
            match bytes[i] {
                b'y' if run == 2 => sem.year = Some(pivot_two_digit_year(n)),
                b'y' => sem.year = Some(n as i32).filter(|y| (1000..=2999).contains(y)),
                b'M' => sem.month = Some(n as u8).filter(|m| (1..=12).contains(m)),
                b'd' => sem.day = Some(n as u8).filter(|d| (1..=31).contains(d)),
                b'H' if n > 23 => return None,
                b'm' | b's' if n > 59 => return None,
                _ => {}
            }
            if matches!(bytes[i], b'y' | b'M' | b'd') && sem.is_unset(bytes[i]) {
                return None;
            }
            i += run;
        }
        sem.calendar_ok().then_some(sem)
    }
}

/// Token predicates used as terminals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermClass {
    FourYear,
    TwoYear,
    MonthNumber,
    MonthAbbr,
    MonthFull,
    /// Day values above 12, which cannot be months.
    DayHigh,
    DayLow,
    Hour12,
    Hour24,
    Minute,
    Second,
    Fraction,
    ZoneHour,
    QuarterDigit,
    QuarterLetter,
    QuarterOrdinal,
    QuarterNoun,
    WeekdayAbbr,
    WeekdayFull,
    MeridianWord,
    MeridianLetter,
    ZoneName,
    Sign,
    TimeSep,
    FracSep,
    Sep,
    /// An alphabetic token outside the date vocabulary.
    Word,
    Digits,
    Compact(Compact),
}

impl TermClass {
    const NAMED: [TermClass; 28] = [
        TermClass::FourYear,
        TermClass::TwoYear,
        TermClass::MonthNumber,
        TermClass::MonthAbbr,
        TermClass::MonthFull,
        TermClass::DayHigh,
        TermClass::DayLow,
        TermClass::Hour12,
        TermClass::Hour24,
        TermClass::Minute,
        TermClass::Second,
        TermClass::Fraction,
        TermClass::ZoneHour,
        TermClass::QuarterDigit,
        TermClass::QuarterLetter,
        TermClass::QuarterOrdinal,
        TermClass::QuarterNoun,
        TermClass::WeekdayAbbr,
        TermClass::WeekdayFull,
        TermClass::MeridianWord,
        TermClass::MeridianLetter,
        TermClass::ZoneName,
        TermClass::Sign,
        TermClass::TimeSep,
        TermClass::FracSep,
        TermClass::Sep,
        TermClass::Word,
        TermClass::Digits,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TermClass::FourYear => "four_year",
            TermClass::TwoYear => "two_year",
            TermClass::MonthNumber => "month_number",
            TermClass::MonthAbbr => "month_abbr",
            TermClass::MonthFull => "month_full",
            TermClass::DayHigh => "day_high",
            TermClass::DayLow => "day_low",
            TermClass::Hour12 => "hour12",
            TermClass::Hour24 => "hour24",
            TermClass::Minute => "minute",
            TermClass::Second => "second",
            TermClass::Fraction => "fraction",
            TermClass::ZoneHour => "zone_hour",
            TermClass::QuarterDigit => "quarter_digit",
            TermClass::QuarterLetter => "quarter_letter",
            TermClass::QuarterOrdinal => "quarter_ordinal",
            TermClass::QuarterNoun => "quarter_noun",
            TermClass::WeekdayAbbr => "weekday_abbr",
            TermClass::WeekdayFull => "weekday_full",
            TermClass::MeridianWord => "meridian_word",
            TermClass::MeridianLetter => "meridian_letter",
            TermClass::ZoneName => "zone_name",
            TermClass::Sign => "sign",
            TermClass::TimeSep => "time_sep",
            TermClass::FracSep => "frac_sep",
            TermClass::Sep => "sep",
            TermClass::Word => "word",
            TermClass::Digits => "digits",
            TermClass::Compact(c) => c.name(),
        }
    }

    pub fn from_name(name: &str) -> Option<TermClass> {
        TermClass::NAMED
            .into_iter()
            .chain(Compact::ALL.into_iter().map(TermClass::Compact))
            .find(|c| c.name() == name)
    }

    /// Field code a leaf of this class stands for, given the token length.
    fn field(self, len: usize) -> Option<FieldCode> {
        use FieldLetter::*;
        let (letter, width) = match self {
            TermClass::FourYear => (Year, 4),
            TermClass::TwoYear => (Year, 2),
            TermClass::MonthNumber => (Month, len.min(2)),
            TermClass::MonthAbbr => (Month, 3),
            TermClass::MonthFull => (Month, 4),
            TermClass::DayHigh | TermClass::DayLow => (Day, len.min(2)),
            TermClass::Hour12 => (Hour12, len.min(2)),
            TermClass::Hour24 => (Hour24, len.min(2)),
            TermClass::Minute => (Minute, 2),
            TermClass::Second => (Second, 2),
            TermClass::Fraction => (Fraction, len.min(9)),
            TermClass::WeekdayAbbr => (Weekday, 3),
            TermClass::WeekdayFull => (Weekday, 4),
            TermClass::MeridianWord => (Meridian, 1),
            TermClass::ZoneName => (ZoneName, 3),
            _ => return None,
        };
        Some(FieldCode::of(letter, width))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Terminal {
    /// Matches a token whose text equals this, ignoring case.
    Literal(String),
    Class(TermClass),
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Literal(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    if c == '"' || c == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("\"")
            }
            Terminal::Class(c) => write!(f, "@{}", c.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    N(u16),
    T(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Guard {
    /// The day bound into the span must exist in its month (and year).
    Calendar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub lhs: u16,
    pub rhs: Vec<Symbol>,
    pub probability: f64,
    /// Weight before per-lhs normalization.
    pub prior: f64,
    pub guard: Option<Guard>,
    /// The whole span becomes this field when converted to a format.
    pub emit: Option<FieldCode>,
    /// Index of the source rule; binarization splits one rule into several
    /// that share an origin.
    pub origin: usize,
}

/// Date parts bound by a derivation, for guards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Sem {
    pub year: Option<i32>,
    pub month: Option<u8>,
    pub day: Option<u8>,
}

impl Sem {
    pub fn merge(self, other: Sem) -> Sem {
        Sem {
            year: self.year.or(other.year),
            month: self.month.or(other.month),
            day: self.day.or(other.day),
        }
    }

    fn is_unset(&self, letter: u8) -> bool {
        match letter {
            b'y' => self.year.is_none(),
            b'M' => self.month.is_none(),
            _ => self.day.is_none(),
        }
    }

    pub fn calendar_ok(&self) -> bool {
        match (self.month, self.day) {
            (Some(m), Some(d)) => {
                let bound = match self.year {
                    Some(y) => days_in_month_bound(u32::from(m), y),
                    None => max_days_in_month(u32::from(m)),
                };
                u32::from(d) <= bound
            }
            _ => true,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown terminal class @{0}")]
    UnknownTerminal(String),
    #[error("rule not in grammar: {0}")]
    UnknownRule(String),
    #[error("unary rules form a cycle through {0}")]
    UnaryCycle(String),
    #[error("nonterminal {0} has no rules")]
    Undefined(String),
}

#[derive(Debug, Clone)]
pub struct Grammar {
    names: Vec<String>,
    /// Nonterminals introduced by binarization.
    intermediate: Vec<bool>,
    terminals: Vec<Terminal>,
    rules: Vec<Rule>,
    /// The rule table before binarization; trees refer to these indices.
    source: Vec<Rule>,
    start: u16,
    vocab: Vocabulary,
}

/// Locale words the terminal predicates consult.
#[derive(Debug, Clone)]
struct Vocabulary {
    locale: Locale,
    quarter_letters: BTreeSet<String>,
    quarter_ordinals: BTreeSet<String>,
    quarter_nouns: BTreeSet<String>,
}

impl Vocabulary {
    fn new(locale: &Locale) -> Vocabulary {
        let mut v = Vocabulary {
            locale: locale.clone(),
            quarter_letters: BTreeSet::new(),
            quarter_ordinals: BTreeSet::new(),
            quarter_nouns: BTreeSet::new(),
        };
        let mut specs = vec![locale.spec().clone()];
        if locale.id() != "en" {
            specs.push(Locale::english().spec().clone());
        }
        for spec in specs {
            for q in &spec.quarters {
                for name in &q.abbr {
                    if let [first, ..] = lex(name).as_slice() {
                        if first.kind == TokenKind::Alpha {
                            v.quarter_letters.insert(first.text.to_lowercase());
                        }
                    }
                }
                for name in &q.full {
                    if let [d, suffix, .., noun] = lex(name).as_slice() {
                        if d.kind == TokenKind::Digits && suffix.kind == TokenKind::Alpha && noun.kind == TokenKind::Alpha {
                            v.quarter_ordinals.insert(suffix.text.to_lowercase());
                            v.quarter_nouns.insert(noun.text.to_lowercase());
                        }
                    }
                }
            }
        }
        v
    }

    fn is_vocabulary(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        lower.chars().count() == 1 && matches!(lower.as_str(), "a" | "p" | "m" | "q" | "z")
            || self.locale.match_month(word).is_some()
            || self.locale.match_weekday(word).is_some()
            || self.locale.match_meridian(word).is_some()
            || ZONE_NAMES.iter().any(|(n, _)| n.eq_ignore_ascii_case(word))
            || self.quarter_letters.contains(&lower)
            || self.quarter_nouns.contains(&lower)
    }

    fn word_form(&self, word: &str, months: bool, form: WordForm) -> Option<u8> {
        let found = if months {
            self.locale.month_prefixes(word)
        } else {
            self.locale.weekday_prefixes(word)
        };
        let hit = |f: WordForm| found.iter().find(|m| m.len == word.len() && m.form == f).map(|m| m.value);
        match form {
            WordForm::Abbr => hit(WordForm::Abbr),
            // A word that is also an abbreviation ("May") reads as one.
            WordForm::Full => hit(WordForm::Full).filter(|_| hit(WordForm::Abbr).is_none()),
        }
    }

    /// `Some` with the bound date parts when the class accepts the token.
    fn accepts(&self, class: TermClass, tok: &LexedToken<'_>) -> Option<Sem> {
        let text = tok.text;
        let digits = tok.kind == TokenKind::Digits;
        let alpha = tok.kind == TokenKind::Alpha;
        let num = || -> Option<u32> { if digits && text.len() <= 9 { text.parse().ok() } else { None } };
        let in_range = |lens: std::ops::RangeInclusive<usize>, lo: u32, hi: u32| {
            lens.contains(&text.len()) && num().is_some_and(|n| (lo..=hi).contains(&n))
        };
        let none = Some(Sem::default());
        match class {
            TermClass::FourYear => {
                let y = num().filter(|y| text.len() == 4 && (1000..=2999).contains(y))?;
                Some(Sem { year: Some(y as i32), ..Sem::default() })
            }
            TermClass::TwoYear => {
                let y = num().filter(|_| text.len() == 2)?;
                Some(Sem { year: Some(pivot_two_digit_year(y)), ..Sem::default() })
            }
            TermClass::MonthNumber => in_range(1..=2, 1, 12).then(|| Sem { month: num().map(|m| m as u8), ..Sem::default() }),
            TermClass::DayHigh => in_range(2..=2, 13, 31).then(|| Sem { day: num().map(|d| d as u8), ..Sem::default() }),
            TermClass::DayLow => in_range(1..=2, 1, 12).then(|| Sem { day: num().map(|d| d as u8), ..Sem::default() }),
            TermClass::Hour12 => in_range(1..=2, 1, 12).then_some(Sem::default()),
            TermClass::Hour24 => in_range(1..=2, 0, 23).then_some(Sem::default()),
            TermClass::Minute | TermClass::Second => in_range(2..=2, 0, 59).then_some(Sem::default()),
            TermClass::ZoneHour => in_range(2..=2, 0, 23).then_some(Sem::default()),
            TermClass::Fraction => (digits && text.len() <= 9).then_some(Sem::default()),
            TermClass::QuarterDigit => in_range(1..=1, 1, 4).then_some(Sem::default()),
            TermClass::Digits => digits.then_some(Sem::default()),
            TermClass::MonthAbbr | TermClass::MonthFull => {
                let form = if class == TermClass::MonthAbbr { WordForm::Abbr } else { WordForm::Full };
                let m = alpha.then(|| self.word_form(text, true, form)).flatten()?;
                Some(Sem { month: Some(m), ..Sem::default() })
            }
            TermClass::WeekdayAbbr | TermClass::WeekdayFull => {
                let form = if class == TermClass::WeekdayAbbr { WordForm::Abbr } else { WordForm::Full };
                alpha.then(|| self.word_form(text, false, form)).flatten()?;
                none
            }
            TermClass::MeridianWord => (alpha && self.locale.match_meridian(text).is_some()).then_some(Sem::default()),
            TermClass::MeridianLetter => (alpha && matches!(text, "a" | "A" | "p" | "P")).then_some(Sem::default()),
            TermClass::ZoneName => {
                (alpha && ZONE_NAMES.iter().any(|(n, _)| word_prefix(text, n) == Some(text.len()))).then_some(Sem::default())
            }
            TermClass::QuarterLetter => (alpha && self.quarter_letters.contains(&text.to_lowercase())).then_some(Sem::default()),
            TermClass::QuarterOrdinal => (alpha && self.quarter_ordinals.contains(&text.to_lowercase())).then_some(Sem::default()),
            TermClass::QuarterNoun => (alpha && self.quarter_nouns.contains(&text.to_lowercase())).then_some(Sem::default()),
            TermClass::Sign => matches!(text, "+" | "-").then_some(Sem::default()),
            TermClass::TimeSep => matches!(text, ":" | ".").then_some(Sem::default()),
            TermClass::FracSep => matches!(text, "." | "," | ":").then_some(Sem::default()),
            TermClass::Sep => (tok.kind == TokenKind::Sep).then_some(Sem::default()),
            TermClass::Word => (alpha && !self.is_vocabulary(text)).then_some(Sem::default()),
            TermClass::Compact(c) => {
                if digits {
                    c.read(text)
                } else {
                    None
                }
            }
        }
    }
}

/// The nonterminal/terminal tables of a grammar under construction.
struct Builder {
    names: Vec<String>,
    terminals: Vec<Terminal>,
    rules: Vec<Rule>,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            names: Vec::new(),
            terminals: Vec::new(),
            rules: Vec::new(),
        }
    }

    fn nonterminal(&mut self, name: &str) -> u16 {
        match self.names.iter().position(|n| n == name) {
            Some(i) => i as u16,
            None => {
                self.names.push(name.to_string());
                (self.names.len() - 1) as u16
            }
        }
    }

    fn terminal(&mut self, t: Terminal) -> u16 {
        match self.terminals.iter().position(|x| *x == t) {
            Some(i) => i as u16,
            None => {
                self.terminals.push(t);
                (self.terminals.len() - 1) as u16
            }
        }
    }

    fn symbol(&mut self, word: &str) -> Result<Symbol, GrammarError> {
        if let Some(class) = word.strip_prefix('@') {
            let c = TermClass::from_name(class).ok_or_else(|| GrammarError::UnknownTerminal(class.to_string()))?;
            Ok(Symbol::T(self.terminal(Terminal::Class(c))))
        } else if let Some(lit) = word.strip_prefix('"').and_then(|w| w.strip_suffix('"')) {
            Ok(Symbol::T(self.terminal(Terminal::Literal(lit.replace("\\\"", "\"").replace("\\\\", "\\")))))
        } else {
            Ok(Symbol::N(self.nonterminal(word)))
        }
    }

    fn add(&mut self, prior: f64, lhs: &str, rhs: &str, guard: Option<Guard>, emit: Option<&str>) {
        let lhs = self.nonterminal(lhs);
        let rhs = split_rhs(rhs)
            .expect("built-in rule text")
            .iter()
            .map(|w| self.symbol(w).expect("built-in symbol"))
            .collect();
        let emit = emit.map(|p| {
            let fs: FormatString = p.parse().expect("built-in emit code");
            let fc = fs.fields().next().expect("emit names a field");
            fc
        });
        let origin = self.rules.len();
        self.rules.push(Rule {
            lhs,
            rhs,
            probability: prior,
            prior,
            guard,
            emit,
            origin,
        });
    }
}

/// Splits rule text on whitespace, keeping quoted literals whole.
fn split_rhs(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            let mut word = String::from('"');
            chars.next();
            let mut closed = false;
            while let Some(c) = chars.next() {
                if c == '\\' {
                    word.push('\\');
                    word.push(chars.next().ok_or("dangling escape")?);
                } else if c == '"' {
                    word.push('"');
                    closed = true;
                    break;
                } else {
                    word.push(c);
                }
            }
            if !closed || word.len() < 3 {
                return Err("unterminated or empty literal".into());
            }
            out.push(word);
        } else {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                word.push(c);
                chars.next();
            }
            out.push(word);
        }
    }
    Ok(out)
}

/// The date-time grammar with default weights for `locale`.
pub fn build_datetime_grammar(locale: &Locale) -> Grammar {
    use Guard::Calendar;
    let mut b = Builder::new();
    let prefer_middle = locale.id() == "en";
    let (middle, little) = if prefer_middle { (0.9, 0.8) } else { (0.8, 0.9) };

    b.add(1.0, START, "Body", None, None);
    b.add(1.0, START, "Joiner Body", None, None);
    b.add(1.0, START, "Body Joiner", None, None);
    b.add(1.0, START, "Joiner Body Joiner", None, None);

    b.add(0.9, "Body", "DateGrammar", None, None);
    b.add(0.7, "Body", "TimeGrammar", None, None);
    b.add(1.0, "Body", "DateGrammar Joiner TimeGrammar", None, None);
    b.add(1.0, "Body", "TimeGrammar Joiner DateGrammar", None, None);
    b.add(1.0, "Body", "DayOfWeek Joiner DateGrammar", None, None);
    b.add(1.0, "Body", "DayOfWeek Joiner DateGrammar Joiner TimeGrammar", None, None);
    b.add(1.0, "Body", "DayOfWeek Joiner Month Joiner Day Joiner TimeGrammar Joiner Year", Some(Calendar), None);
    b.add(0.7, "Body", "@compact_hms", None, None);

    b.add(0.8, "DateGrammar", "BigEndianDate", None, None);
    b.add(middle, "DateGrammar", "MiddleEndianDate", None, None);
    b.add(little, "DateGrammar", "LittleEndianDate", None, None);
    b.add(0.9, "DateGrammar", "MonthYear", None, None);
    b.add(0.9, "DateGrammar", "QuarterYear", None, None);

    // Two-digit years lead only in the packed yyMMdd form.
    b.add(1.0, "BigEndianDate", "@four_year Joiner Month Joiner Day", Some(Calendar), None);
    b.add(1.0, "BigEndianDate", "@compact_ymd", None, None);
    b.add(1.0, "BigEndianDate", "@compact_yymd", None, None);
    b.add(1.0, "MiddleEndianDate", "Month Joiner Day Joiner Year", Some(Calendar), None);
    b.add(1.0, "MiddleEndianDate", "@compact_mdy", None, None);
    b.add(1.0, "LittleEndianDate", "Day Joiner Month Joiner Year", Some(Calendar), None);
    b.add(1.0, "LittleEndianDate", "Day MonthWord Year", Some(Calendar), None);
    b.add(1.0, "LittleEndianDate", "@compact_dmy", None, None);
    b.add(1.0, "MonthYear", "Month Joiner Year", None, None);
    b.add(1.0, "MonthYear", "Year Joiner Month", None, None);
    b.add(1.0, "MonthYear", "@compact_my", None, None);
    b.add(1.0, "MonthYear", "@compact_ym", None, None);
    b.add(1.0, "QuarterYear", "Quarter Joiner Year", None, None);
    b.add(1.0, "QuarterYear", "Year Joiner Quarter", None, None);
    b.add(1.0, "Quarter", "@quarter_letter @quarter_digit", None, Some("QQQ"));
    b.add(1.0, "Quarter", "@quarter_digit @quarter_ordinal \" \" @quarter_noun", None, Some("QQQQ"));

    b.add(1.0, "Year", "@four_year", None, None);
    b.add(1.0, "Year", "@two_year", None, None);
    b.add(1.0, "Month", "@month_number", None, None);
    b.add(1.0, "Month", "MonthWord", None, None);
    b.add(1.0, "MonthWord", "@month_abbr", None, None);
    b.add(1.0, "MonthWord", "@month_full", None, None);
    b.add(1.0, "Day", "@day_high", None, None);
    b.add(0.5, "Day", "@day_low", None, None);
    b.add(1.0, "DayOfWeek", "@weekday_abbr", None, None);
    b.add(1.0, "DayOfWeek", "@weekday_full", None, None);

    b.add(0.7, "TimeGrammar", "Clock24", None, None);
    b.add(0.7, "TimeGrammar", "Clock24 ZonePart", None, None);
    b.add(0.7, "TimeGrammar", "Clock12 AmPmPart", None, None);
    b.add(0.7, "TimeGrammar", "Clock12 AmPmPart ZonePart", None, None);
    b.add(1.0, "Clock24", "@hour24 Minutes", None, None);
    b.add(1.0, "Clock12", "@hour12 Minutes", None, None);
    b.add(1.0, "Minutes", "@time_sep @minute", None, None);
    b.add(1.0, "Minutes", "@time_sep @minute @time_sep @second", None, None);
    b.add(1.0, "Minutes", "@time_sep @minute @time_sep @second @frac_sep @fraction", None, None);
    b.add(1.0, "AmPmPart", "AMPM", None, None);
    b.add(1.0, "AmPmPart", "Joiner AMPM", None, None);
    b.add(1.0, "AMPM", "@meridian_word", None, None);
    b.add(1.0, "AMPM", "@meridian_letter \".\" \"m\" \".\"", None, Some("a"));
    b.add(1.0, "AMPM", "@meridian_letter \".\" \" \" \"m\" \".\"", None, Some("a"));
    b.add(1.0, "ZonePart", "TimeZone", None, None);
    b.add(1.0, "ZonePart", "Joiner TimeZone", None, None);
    b.add(1.0, "TimeZone", "@zone_name", None, None);
    b.add(1.0, "TimeZone", "@sign @digits", None, Some("Z"));
    b.add(1.0, "TimeZone", "@sign @zone_hour \":\" @minute", None, Some("ZZZZZ"));
    b.add(1.0, "TimeZone", "\"GMT\" @sign @zone_hour \":\" @minute", None, Some("ZZZZ"));
    b.add(1.0, "TimeZone", "\"Z\"", None, Some("ZZZZZ"));

    b.add(1.0, "Joiner", "JoinPiece", None, None);
    b.add(1.0, "Joiner", "Joiner JoinPiece", None, None);
    b.add(1.0, "JoinPiece", "@sep", None, None);
    b.add(1.0, "JoinPiece", "@word", None, None);

    finish(b, locale, START).expect("built-in grammar is well formed")
}

fn finish(b: Builder, locale: &Locale, start: &str) -> Result<Grammar, GrammarError> {
    let start = b
        .names
        .iter()
        .position(|n| n == start)
        .ok_or_else(|| GrammarError::Undefined(start.to_string()))? as u16;
    for (i, name) in b.names.iter().enumerate() {
        if !b.rules.iter().any(|r| r.lhs as usize == i) {
            return Err(GrammarError::Undefined(name.clone()));
        }
    }
    let mut g = Grammar {
        intermediate: vec![false; b.names.len()],
        names: b.names,
        terminals: b.terminals,
        source: b.rules.clone(),
        rules: b.rules,
        start,
        vocab: Vocabulary::new(locale),
    };
    g.unary_order()?;
    g.renormalize();
    Ok(g)
}

impl Grammar {
    pub fn start(&self) -> u16 {
        self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Rules as written, before binarization. Tree node rule ids index this.
    pub fn source_rules(&self) -> &[Rule] {
        &self.source
    }

    pub fn terminals(&self) -> &[Terminal] {
        &self.terminals
    }

    pub fn nonterminal_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, nt: u16) -> &str {
        &self.names[nt as usize]
    }

    pub fn nonterminal(&self, name: &str) -> Option<u16> {
        self.names.iter().position(|n| n == name).map(|i| i as u16)
    }

    pub fn is_intermediate(&self, nt: u16) -> bool {
        self.intermediate[nt as usize]
    }

    pub fn is_binary(&self) -> bool {
        self.rules.iter().all(|r| r.rhs.len() <= 2)
    }

    pub fn locale(&self) -> &Locale {
        &self.vocab.locale
    }

    /// Nonterminals and terminals reachable from the source rules.
    pub fn source_symbol_counts(&self) -> (usize, usize) {
        let nts: BTreeSet<u16> = self.source.iter().map(|r| r.lhs).collect();
        let ts: BTreeSet<u16> = self
            .source
            .iter()
            .flat_map(|r| r.rhs.iter())
            .filter_map(|s| match s {
                Symbol::T(t) => Some(*t),
                Symbol::N(_) => None,
            })
            .collect();
        (nts.len(), ts.len())
    }

    pub fn symbol_text(&self, s: Symbol) -> String {
        match s {
            Symbol::N(n) => self.names[n as usize].clone(),
            Symbol::T(t) => self.terminals[t as usize].to_string(),
        }
    }

    pub fn rule_text(&self, r: &Rule) -> String {
        let rhs: Vec<String> = r.rhs.iter().map(|s| self.symbol_text(*s)).collect();
        format!("{} -> {}", self.names[r.lhs as usize], rhs.join(" "))
    }

    /// Terminal match for one token; `Some` carries the date parts it binds.
    pub fn terminal_accepts(&self, t: u16, tok: &LexedToken<'_>) -> Option<Sem> {
        match &self.terminals[t as usize] {
            Terminal::Literal(s) => {
                let eq = if tok.kind == TokenKind::Alpha {
                    tok.text.to_lowercase() == s.to_lowercase()
                } else {
                    tok.text == s
                };
                eq.then_some(Sem::default())
            }
            Terminal::Class(c) => self.vocab.accepts(*c, tok),
        }
    }

    /// Field code for a leaf matched by terminal `t`.
    pub fn leaf_field(&self, t: u16, tok: &LexedToken<'_>) -> Option<FieldCode> {
        match &self.terminals[t as usize] {
            Terminal::Class(c) => c.field(tok.text.chars().count()),
            Terminal::Literal(_) => None,
        }
    }

    /// Leaves that stand for their own text in a format.
    pub fn leaf_is_literal(&self, t: u16) -> bool {
        matches!(
            &self.terminals[t as usize],
            Terminal::Literal(_)
                | Terminal::Class(TermClass::Sep | TermClass::Word | TermClass::TimeSep | TermClass::FracSep)
        )
    }

    pub fn compact_pattern(&self, t: u16) -> Option<&'static str> {
        match &self.terminals[t as usize] {
            Terminal::Class(TermClass::Compact(c)) => Some(c.pattern()),
            _ => None,
        }
    }

    /// Unary-rule evaluation order: a rule `A -> B` appears after every
    /// unary rule with lhs `B`.
    pub fn unary_order(&self) -> Result<Vec<usize>, GrammarError> {
        let n = self.names.len();
        let unary: Vec<usize> = (0..self.rules.len())
            .filter(|&i| matches!(self.rules[i].rhs.as_slice(), [Symbol::N(_)]))
            .collect();
        // Depth-first topological sort over nonterminals.
        let mut state = vec![0u8; n];
        let mut order_nt = Vec::new();
        fn visit(
            g: &Grammar,
            unary: &[usize],
            nt: u16,
            state: &mut [u8],
            out: &mut Vec<u16>,
        ) -> Result<(), GrammarError> {
            match state[nt as usize] {
                1 => return Err(GrammarError::UnaryCycle(g.names[nt as usize].clone())),
                2 => return Ok(()),
                _ => {}
            }
            state[nt as usize] = 1;
            for &ri in unary {
                let r = &g.rules[ri];
                if r.lhs == nt {
                    if let [Symbol::N(child)] = r.rhs.as_slice() {
                        visit(g, unary, *child, state, out)?;
                    }
                }
            }
            state[nt as usize] = 2;
            out.push(nt);
            Ok(())
        }
        for nt in 0..n as u16 {
            visit(self, &unary, nt, &mut state, &mut order_nt)?;
        }
        let mut order = Vec::new();
        for nt in order_nt {
            order.extend(unary.iter().copied().filter(|&ri| self.rules[ri].lhs == nt));
        }
        Ok(order)
    }

    fn renormalize(&mut self) {
        let mut totals: HashMap<u16, f64> = HashMap::new();
        for r in &self.source {
            *totals.entry(r.lhs).or_default() += r.probability;
        }
        for r in &mut self.source {
            r.probability /= totals[&r.lhs];
        }
        self.sync_probabilities();
    }

    /// Copies source probabilities onto the (possibly binarized) rules.
    fn sync_probabilities(&mut self) {
        for r in &mut self.rules {
            r.probability = if self.intermediate[r.lhs as usize] {
                1.0
            } else {
                self.source[r.origin].probability
            };
        }
    }

    /// Replaces the source rule probabilities and renormalizes per lhs.
    pub fn with_source_probabilities(&self, probs: &[f64]) -> Grammar {
        assert_eq!(probs.len(), self.source.len());
        let mut g = self.clone();
        for (r, p) in g.source.iter_mut().zip(probs) {
            r.probability = *p;
        }
        g.renormalize();
        g
    }

    /// Per-lhs probability sums over the source rules.
    pub fn lhs_sums(&self) -> Vec<(String, f64)> {
        let mut sums: Vec<(u16, f64)> = Vec::new();
        for r in &self.source {
            match sums.iter_mut().find(|(l, _)| *l == r.lhs) {
                Some(e) => e.1 += r.probability,
                None => sums.push((r.lhs, r.probability)),
            }
        }
        sums.into_iter().map(|(l, s)| (self.names[l as usize].clone(), s)).collect()
    }

    /// One rule per line: `p lhs -> rhs...`, with `#calendar` and
    /// `#emit=CODE` annotations.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in &self.source {
            out.push_str(&format!("{} {}", r.probability, self.rule_text(r)));
            if r.guard == Some(Guard::Calendar) {
                out.push_str(" #calendar");
            }
            if let Some(fc) = r.emit {
                out.push_str(&format!(" #emit={fc}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses a grammar dump. The first rule's lhs is the start symbol.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_dump(text: &str, locale: &Locale) -> Result<Grammar, GrammarError> {
        let mut b = Builder::new();
        let mut start = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: &str| GrammarError::Syntax {
                line: i + 1,
                message: message.to_string(),
            };
            let words = split_rhs(line).map_err(|m| syntax(&m))?;
            let [p, lhs, arrow, rest @ ..] = words.as_slice() else {
                return Err(syntax("expected `p lhs -> rhs...`"));
            };
            let prob: f64 = p.parse().map_err(|_| syntax("bad probability"))?;
            if !(prob > 0.0 && prob.is_finite()) {
                return Err(syntax("probability must be positive"));
            }
            if arrow != "->" || lhs.starts_with(['@', '"']) {
                return Err(syntax("expected `lhs ->`"));
            }
            let mut guard = None;
            let mut emit = None;
            let mut rhs = Vec::new();
            for w in rest {
                if w == "#calendar" {
                    guard = Some(Guard::Calendar);
                } else if let Some(code) = w.strip_prefix("#emit=") {
                    let fs: FormatString = code.parse().map_err(|_| syntax("bad emit code"))?;
                    match fs.tokens() {
                        [crate::icu::FormatToken::Field(fc)] => emit = Some(*fc),
                        _ => return Err(syntax("emit must be one field")),
                    }
                } else if w.starts_with('#') {
                    return Err(syntax("unknown annotation"));
                } else {
                    rhs.push(b.symbol(w)?);
                }
            }
            if rhs.is_empty() {
                return Err(syntax("empty right-hand side"));
            }
            let lhs_id = b.nonterminal(lhs);
            start.get_or_insert_with(|| lhs.clone());
            let origin = b.rules.len();
            b.rules.push(Rule {
                lhs: lhs_id,
                rhs,
                probability: prob,
                prior: prob,
                guard,
                emit,
                origin,
            });
        }
        let start = start.ok_or(GrammarError::Syntax {
            line: 0,
            message: "no rules".into(),
        })?;
        finish(b, locale, &start)
    }

    /// Sets probabilities from a dump of the same rule set.
    pub fn load_weights(&self, text: &str) -> Result<Grammar, GrammarError> {
        let index: HashMap<String, usize> = self
            .source
            .iter()
            .enumerate()
            .map(|(i, r)| (self.rule_text(r), i))
            .collect();
        let mut probs: Vec<f64> = self.source.iter().map(|r| r.probability).collect();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: &str| GrammarError::Syntax {
                line: i + 1,
                message: message.to_string(),
            };
            let words = split_rhs(line).map_err(|m| syntax(&m))?;
            let Some((p, rest)) = words.split_first() else {
                return Err(syntax("empty line"));
            };
            let prob: f64 = p.parse().map_err(|_| syntax("bad probability"))?;
            if !(prob > 0.0 && prob.is_finite()) {
                return Err(syntax("probability must be positive"));
            }
            let body: Vec<&str> = rest.iter().map(String::as_str).filter(|w| !w.starts_with('#')).collect();
            // Re-render through the symbol printer so quoting matches.
            let key = body.join(" ");
            let ri = *index.get(&key).ok_or(GrammarError::UnknownRule(key))?;
            probs[ri] = prob;
        }
        Ok(self.with_source_probabilities(&probs))
    }
}

/// Splits rules with more than two right-hand symbols into chains. Only the
/// first link carries the probability and guard; the rest have probability 1.
pub fn binarize(g: &Grammar) -> Grammar {
    if g.is_binary() {
        return g.clone();
    }
    let mut names = g.names.clone();
    let mut intermediate = g.intermediate.clone();
    let mut rules = Vec::new();
    for (ri, r) in g.rules.iter().enumerate() {
        if r.rhs.len() <= 2 {
            rules.push(r.clone());
            continue;
        }
        let mut lhs = r.lhs;
        let mut rest: &[Symbol] = &r.rhs;
        let mut link = 0;
        while rest.len() > 2 {
            link += 1;
            names.push(format!("{}@{}.{}", g.names[r.lhs as usize], ri, link));
            intermediate.push(true);
            let next = (names.len() - 1) as u16;
            rules.push(Rule {
                lhs,
                rhs: vec![rest[0], Symbol::N(next)],
                probability: if link == 1 { r.probability } else { 1.0 },
                guard: if link == 1 { r.guard } else { None },
                emit: if link == 1 { r.emit } else { None },
                ..r.clone()
            });
            lhs = next;
            rest = &rest[1..];
        }
        rules.push(Rule {
            lhs,
            rhs: rest.to_vec(),
            probability: 1.0,
            guard: None,
            emit: None,
            ..r.clone()
        });
    }
    Grammar {
        names,
        intermediate,
        terminals: g.terminals.clone(),
        rules,
        source: g.source.clone(),
        start: g.start,
        vocab: g.vocab.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(tokens: &[LexedToken<'_>]) -> Vec<(TokenKind, String)> {
        tokens.iter().map(|t| (t.kind, t.text.to_string())).collect()
    }

    #[test]
    fn lex_examples() {
        use TokenKind::*;
        assert_eq!(
            texts(&lex("04/09/2014")),
            vec![
                (Digits, "04".into()),
                (Sep, "/".into()),
                (Digits, "09".into()),
                (Sep, "/".into()),
                (Digits, "2014".into())
            ]
        );
        assert!(lex("").is_empty());
        assert_eq!(texts(&lex("Q2")), vec![(Alpha, "Q".into()), (Digits, "2".into())]);
        assert_eq!(texts(&lex("1º  é")).len(), 5);
    }

    proptest! {
        #[test]
        fn lex_is_lossless(s in "\\PC{0,40}") {
            let toks = lex(&s);
            let joined: String = toks.iter().map(|t| t.text).collect();
            prop_assert_eq!(&joined, &s);
            for t in &toks {
                prop_assert_eq!(&s[t.start..t.start + t.text.len()], t.text);
            }
            for w in toks.windows(2) {
                prop_assert!(w[0].kind == TokenKind::Sep || w[0].kind != w[1].kind);
            }
        }
    }

    #[test]
    fn symbol_counts_near_reference() {
        let g = build_datetime_grammar(&Locale::english());
        let (nts, ts) = g.source_symbol_counts();
        assert!((18..=28).contains(&nts), "{nts} nonterminals");
        // Packed digit forms (yyyyMMdd and friends) are counted as terminals.
        assert!((24..=45).contains(&ts), "{ts} terminals");
    }

    #[test]
    fn default_priors_and_normalization() {
        let g = build_datetime_grammar(&Locale::english());
        let dg = g.nonterminal("DateGrammar").unwrap();
        let first = g.source_rules().iter().find(|r| r.lhs == dg).unwrap();
        assert_eq!(first.prior, 0.8);
        let day = g.nonterminal("Day").unwrap();
        let day_rules: Vec<&Rule> = g.source_rules().iter().filter(|r| r.lhs == day).collect();
        assert_eq!(day_rules.iter().map(|r| r.prior).collect::<Vec<_>>(), vec![1.0, 0.5]);
        assert!((day_rules[0].probability / day_rules[1].probability - 2.0).abs() < 1e-12);
        for (name, sum) in g.lhs_sums() {
            assert!((sum - 1.0).abs() < 1e-9, "{name} sums to {sum}");
        }
    }

    #[test]
    fn binarize_preserves_probabilities() {
        let en = Locale::english();
        let g = Grammar::from_dump("0.4 A -> B C D\n0.6 A -> \"x\"\n1 B -> \"b\"\n1 C -> \"c\"\n1 D -> \"d\"\n", &en).unwrap();
        let bg = binarize(&g);
        assert!(bg.is_binary());
        let a = bg.nonterminal("A").unwrap();
        let top: Vec<&Rule> = bg.rules().iter().filter(|r| r.lhs == a).collect();
        assert_eq!(top.len(), 2);
        assert!((top[0].probability - 0.4).abs() < 1e-12);
        assert_eq!(top[0].rhs.len(), 2);
        let chained: Vec<&Rule> = bg.rules().iter().filter(|r| bg.is_intermediate(r.lhs)).collect();
        assert_eq!(chained.len(), 1);
        assert_eq!(chained[0].probability, 1.0);
        let product: f64 = bg.rules().iter().filter(|r| r.origin == 0).map(|r| r.probability).product();
        assert!((product - 0.4).abs() < 1e-12);

        let binary = Grammar::from_dump("1 S -> A B\n1 A -> \"a\"\n1 B -> \"b\"\n", &en).unwrap();
        assert_eq!(binarize(&binary).rules(), binary.rules());
    }

    #[test]
    fn dump_round_trips() {
        let g = build_datetime_grammar(&Locale::english());
        let text = g.dump();
        let again = Grammar::from_dump(&text, &Locale::english()).unwrap();
        assert_eq!(again.dump(), text);
        assert!(text.contains("AMPM -> @meridian_letter \".\" \"m\" \".\" #emit=a"));
        let reweighted = g.load_weights("3 Day -> @day_low\n").unwrap();
        let day = g.nonterminal("Day").unwrap();
        let low = reweighted.source_rules().iter().find(|r| r.lhs == day && r.prior == 0.5).unwrap();
        // The untouched high-day rule keeps its 2/3 before renormalizing.
        assert!((low.probability - 3.0 / (3.0 + 2.0 / 3.0)).abs() < 1e-12);
        assert!(matches!(g.load_weights("1 Day -> @year"), Err(GrammarError::UnknownTerminal(_)) | Err(GrammarError::UnknownRule(_))));
    }

    #[test]
    fn dump_errors() {
        let en = Locale::english();
        assert!(matches!(Grammar::from_dump("x A -> B", &en), Err(GrammarError::Syntax { line: 1, .. })));
        assert!(matches!(Grammar::from_dump("1 A -> B", &en), Err(GrammarError::Undefined(_))));
        assert!(matches!(Grammar::from_dump("1 A -> @nope", &en), Err(GrammarError::UnknownTerminal(_))));
        assert!(matches!(Grammar::from_dump("1 A -> B\n1 B -> A", &en), Err(GrammarError::UnaryCycle(_))));
        assert!(matches!(Grammar::from_dump("1 A -> \"x", &en), Err(GrammarError::Syntax { .. })));
        assert!(matches!(Grammar::from_dump("", &en), Err(GrammarError::Syntax { .. })));
    }

    #[test]
    fn terminal_predicates() {
        let g = build_datetime_grammar(&Locale::english());
        let tid = |c: TermClass| g.terminals().iter().position(|t| *t == Terminal::Class(c)).unwrap() as u16;
        let tok = |s: &'static str| lex(s)[0];
        assert!(g.terminal_accepts(tid(TermClass::DayHigh), &tok("25")).is_some());
        assert!(g.terminal_accepts(tid(TermClass::DayHigh), &tok("06")).is_none());
        assert!(g.terminal_accepts(tid(TermClass::DayLow), &tok("06")).is_some());
        assert!(g.terminal_accepts(tid(TermClass::MonthAbbr), &tok("Sept")).is_some());
        assert!(g.terminal_accepts(tid(TermClass::MonthAbbr), &tok("May")).is_some());
        assert!(g.terminal_accepts(tid(TermClass::MonthFull), &tok("May")).is_none());
        assert!(g.terminal_accepts(tid(TermClass::MonthFull), &tok("june")).is_some());
        assert!(g.terminal_accepts(tid(TermClass::Word), &tok("T")).is_some());
        assert!(g.terminal_accepts(tid(TermClass::Word), &tok("Oct")).is_none());
        assert!(g.terminal_accepts(tid(TermClass::Word), &tok("a")).is_none());
        assert!(g.terminal_accepts(tid(TermClass::ZoneName), &tok("EDT")).is_some());
        let ymd = tid(TermClass::Compact(Compact::YearMonthDay));
        assert_eq!(
            g.terminal_accepts(ymd, &tok("20140102")),
            Some(Sem { year: Some(2014), month: Some(1), day: Some(2) })
        );
        assert!(g.terminal_accepts(ymd, &tok("20130229")).is_none());
        assert!(g.terminal_accepts(ymd, &tok("20141301")).is_none());
    }

    #[test]
    fn calendar_equivalence_all_months() {
        // Compare against day counts derived from the civil calendar.
        use crate::calendar::days_from_civil;
        for year in [2013, 2016] {
            for month in 1..=12u32 {
                let next = if month == 12 { days_from_civil(year + 1, 1, 1) } else { days_from_civil(year, month + 1, 1) };
                let len = next - days_from_civil(year, month, 1);
                assert_eq!(i64::from(days_in_month_bound(month, year)), len);
            }
        }
    }
}
